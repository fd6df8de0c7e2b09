"""Smoke test for the noma_radcom_py extension module.

Build and install first:

    pip install -e crates/python --no-build-isolation
"""

import cmath
import math
import tempfile

import noma_radcom_py as nr


def main():
    sv = nr.steering_vector(0.3, 4)
    assert len(sv) == 4 and sv[0] == 1
    assert abs(sv[1] - cmath.exp(1j * math.pi * math.sin(0.3))) < 1e-12
    assert nr.format_float(0.00125) == "1.2500000000000000e-3"

    cfg = nr.Config(n_antennas=6, gamma_b_db=-10.0, seed=3)
    assert nr.Config.from_toml(cfg.to_toml()).to_dict() == cfg.to_dict()
    try:
        nr.Config(trials=0)
    except nr.NomaRadcomError:
        pass
    else:
        raise AssertionError("trials = 0 accepted")

    sc = cfg.scenario(0)
    assert len(sc.h_c) == 6 and len(sc.theta_deg) == len(sc.desired)
    ideal = sc.ideal_pattern()
    assert ideal.delta0 > 0
    assert abs(sum(ideal.r0[i][i].real for i in range(6)) - sc.p_max) < 1e-9 * sc.p_max

    rates = {}
    for scheme in ("noma", "tdma", "cbf_no_sic"):
        rep = nr.solve(sc, ideal, scheme, cfg)
        assert rep.converged, rep
        assert rep.multicast >= 0.5 - 1e-6
        assert rep.mismatch_ratio <= 0.1 + 1e-6
        w_m, w_u = rep.beamformers
        assert len(w_m) == len(w_u) == 6
        assert len(rep.gains) == len(sc.theta_deg)
        rates[scheme] = rep.unicast
        print(f"{scheme:>10}: unicast {rep.unicast:.4f} bit/s/Hz, mismatch {rep.mismatch_ratio:.4g}")
    assert rates["noma"] >= rates["tdma"] and rates["noma"] >= rates["cbf_no_sic"]

    with tempfile.TemporaryDirectory() as out:
        sweep = nr.Config(
            trials=2,
            schemes=["noma"],
            sweep_variable="gamma_b_db",
            sweep_values=[-20.0, -5.0],
            output_dir=out,
        )
        manifest = nr.run_sweep(sweep)
        assert len(manifest["records"]) == 4
        assert manifest["version"] == nr.__version__

    print("ok")


if __name__ == "__main__":
    main()
