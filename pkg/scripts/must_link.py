"""Link-level BER and goodput of the MUST category constellations."""

from _common import parser, run_config

if __name__ == "__main__":
    run_config("must_link.json", parser(__doc__).parse_args())
