import sys

from orthantpop.cli import main

sys.exit(main())
