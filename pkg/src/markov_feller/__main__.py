import sys

from markov_feller.cli import main

sys.exit(main())
