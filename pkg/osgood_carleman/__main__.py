"""Allow ``python -m osgood_carleman``."""
from .cli_report import main

raise SystemExit(main())
