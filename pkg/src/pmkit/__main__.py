"""Allow ``python -m pmkit``."""

from pmkit.cli.main import main

raise SystemExit(main())
