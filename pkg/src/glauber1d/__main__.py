import sys

from glauber1d.cli import main

sys.exit(main())
