"""NOMA vs OMA ergodic sum rate over User B positions, fixed and CR allocation."""

from _common import parser, run_config

if __name__ == "__main__":
    args = parser(__doc__).parse_args()
    run_config("fig5_fixed.json", args)
    run_config("fig5_cr.json", args)
