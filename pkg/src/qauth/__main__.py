from qauth.cli import main

raise SystemExit(main())
