"""Ergodic NOMA-SM and TDMA sum rates against the number of antennas."""

from _common import parser, run_config

if __name__ == "__main__":
    run_config("fig3_scaling.json", parser(__doc__).parse_args())
