import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from lmgtherm.errors import DomainError
from lmgtherm.geometry import builtin, chain, cube_random, extent, read_positions, write_positions
from lmgtherm.regime import (
    ALPHA,
    BOHR_UM,
    HC_EV_UM,
    dipolar_coupling_estimate,
    regime_classify,
)


class TestGeometry:
    def test_builtins(self):
        assert np.array_equal(builtin("coincident", 3), np.zeros((3, 3)))
        assert np.array_equal(builtin("chain(0.5)", 3)[:, 0], [0, 0.5, 1.0])
        a = builtin("cube_random(2, 7)", 5)
        assert np.array_equal(a, cube_random(5, 2.0, 7))
        assert np.all((a >= 0) & (a <= 2))
        for bad in ("chain", "sphere(1)", "cube_random(1,2,3)", "(("):
            with pytest.raises(DomainError):
                builtin(bad, 3)

    def test_extent(self):
        ell, a = extent(chain(4, 0.25))
        assert ell == pytest.approx(0.75) and a == pytest.approx(0.25)
        with pytest.raises(DomainError):
            extent(np.zeros((1, 3)))

    @pytest.mark.parametrize("unit", ["nm", "um", "angstrom", "m"])
    def test_file_round_trip(self, tmp_path, unit):
        pos = cube_random(6, 0.01, 3)
        path = tmp_path / "pos.txt"
        write_positions(path, pos, unit)
        assert path.read_text().startswith(f"# units: {unit}\n")
        assert np.allclose(read_positions(path), pos, rtol=1e-15, atol=0)

    def test_file_parsing(self, tmp_path):
        p = tmp_path / "p.txt"
        p.write_text("# Units: nm\n1 2 3  # first\n\n4 5 6\n")
        assert np.allclose(read_positions(p), [[1e-3, 2e-3, 3e-3], [4e-3, 5e-3, 6e-3]])
        p.write_text("1 2 3\n")
        with pytest.raises(DomainError):
            read_positions(p)
        p.write_text("# units: furlong\n1 2 3\n")
        with pytest.raises(DomainError):
            read_positions(p)
        p.write_text("# units: nm\n1 2\n")
        with pytest.raises(DomainError):
            read_positions(p)


class TestRegime:
    def test_constants(self):
        assert HC_EV_UM == pytest.approx(1.23984, rel=1e-5)
        assert BOHR_UM == pytest.approx(5.29177e-5, rel=1e-5)
        assert 1 / ALPHA == pytest.approx(137.036, rel=1e-6)

    def test_mn12_is_coherent(self):
        # hc / (J hbar^2) = 2 cm, molecule size 2 nm
        delta_e = HC_EV_UM / 2e4
        r = regime_classify(ell=2e-3, a=1e-3, delta_e=delta_e)
        assert r.regime == "fully_coherent"
        assert r.coherent_margin == pytest.approx(1e7, rel=1e-12)

    def test_incoherent_and_intermediate(self):
        assert regime_classify(1.0, 0.5, delta_e=500 * HC_EV_UM / 0.5).regime == "fully_incoherent"
        assert regime_classify(1.0, 0.5, delta_e=HC_EV_UM).regime == "intermediate"
        # hot enough: beta hc / a << 1
        hot = regime_classify(1.0, 0.5, delta_e=HC_EV_UM, beta=1e-3)
        assert hot.regime == "fully_incoherent" and hot.thermal_margin == pytest.approx(0.5 / (1e-3 * HC_EV_UM))

    def test_margin_factor_is_a_knob(self):
        de = HC_EV_UM / 50.0
        assert regime_classify(1.0, 0.1, delta_e=de).regime == "intermediate"
        assert regime_classify(1.0, 0.1, delta_e=de, margin_factor=10).regime == "fully_coherent"

    @given(st.floats(BOHR_UM, 1e3), st.floats(1.0, 1e6))
    def test_dipolar_crystal_never_incoherent(self, a, ratio):
        r = regime_classify(ell=a * ratio, a=a)
        assert r.regime != "fully_incoherent"
        assert r.dipolar_incoherent_margin < 1.0
        assert r.incoherent_margin < 1.0

    def test_dipolar_estimate(self):
        assert dipolar_coupling_estimate(1.0) == pytest.approx(
            ALPHA**3 * BOHR_UM**2 * math.pi * (HC_EV_UM / (2 * math.pi)), rel=1e-14
        )
        with pytest.raises(DomainError):
            dipolar_coupling_estimate(0.0)

    def test_json(self):
        rec = json.loads(regime_classify(2e-3, 1e-3, delta_e=1e-4, beta=2.0).to_json())
        assert rec["regime"] == "fully_coherent"
        assert set(rec["constants"]) == {"hc_eV_um", "bohr_radius_um", "fine_structure"}
        assert rec["margin_factor"] == 100.0

    def test_validation(self):
        for kwargs in (
            dict(ell=1.0, a=2.0, delta_e=1.0),
            dict(ell=1.0, a=0.0, delta_e=1.0),
            dict(ell=1.0, a=0.5, delta_e=0.0),
            dict(ell=1.0, a=0.5, delta_e=1.0, beta=-1.0),
            dict(ell=1.0, a=0.5, delta_e=1.0, margin_factor=1.0),
        ):
            with pytest.raises(DomainError):
                regime_classify(**kwargs)
