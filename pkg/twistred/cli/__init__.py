import twistred.cli.run
import twistred.cli.scenarios
from twistred.cli.cli import app
