import sys

from gradedlie.cli import main

sys.exit(main())
