from pureloss.cli import main

raise SystemExit(main())
