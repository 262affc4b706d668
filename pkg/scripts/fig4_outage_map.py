"""Cooperative vs non-cooperative outage over User B positions, plus the SNR
sweep used for the diversity fit."""

from _common import parser, run_config

if __name__ == "__main__":
    ap = parser(__doc__)
    ap.add_argument("--skip-sweep", action="store_true", help="only produce the position map")
    args = ap.parse_args()
    run_config("fig4_outage_map.json", args)
    if not args.skip_sweep:
        run_config("fig4_snr_sweep.json", args)
