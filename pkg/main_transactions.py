import sys

from src.cli_runner import main


sys.exit(main())
