import sys

from hybridwalk.harness.cli import main

sys.exit(main())
