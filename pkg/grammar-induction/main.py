import sys

from dotenv import load_dotenv

# GRAMMAR_INDUCTION_* settings may live in a .env next to the run
load_dotenv()

from interface.cli import main  # noqa: E402

if __name__ == "__main__":
    sys.exit(main())
