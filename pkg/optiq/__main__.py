import sys

from optiq.main import cli_main

sys.exit(cli_main())
