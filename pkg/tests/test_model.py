import json
from fractions import Fraction

import numpy as np
import pytest

from mscw.model import (
    ModelError,
    ModelSpec,
    SpeciesPartition,
    SpinConfig,
    energy_quadratic,
    g_per_spin,
    load_model,
    magnetizations,
    parse_model,
    validate_model,
)

from conftest import all_configs, make_model, random_pd_model


class TestSpeciesPartition:
    def test_alphas_exact(self):
        p = SpeciesPartition((1, 2, 3))
        assert p.N == 6
        assert p.fractions == (Fraction(1, 6), Fraction(1, 3), Fraction(1, 2))
        assert sum(p.fractions) == 1

    @pytest.mark.parametrize("sizes", [(0, 2), (-1,), (), (1.5, 2)])
    def test_rejects_bad_sizes(self, sizes):
        with pytest.raises(ModelError):
            SpeciesPartition(sizes)

    def test_scaled_keeps_fractions(self):
        p = SpeciesPartition((2, 3))
        assert p.scaled(7).fractions == p.fractions


class TestValidateModel:
    def test_pd_verdict(self):
        m = make_model((1, 1), [[0.8, 0.3], [0.3, 0.8]])
        assert m.positive_definite
        np.testing.assert_allclose(m.smallest_eigenvalue, 0.5, atol=1e-14)

    def test_not_pd(self):
        m = make_model((1, 1), [[1, 2], [2, 1]])
        assert not m.positive_definite
        np.testing.assert_allclose(m.smallest_eigenvalue, -1.0, atol=1e-14)

    def test_reduced_matrix_A(self):
        m = make_model((1, 1), [[2, 0], [0, 2]])
        np.testing.assert_allclose(m.A, np.eye(2), atol=1e-15)

    def test_asymmetric_rejected_with_entry(self):
        spec = ModelSpec.from_sizes((1, 1), [[1.0, 0.2], [0.3, 1.0]])
        with pytest.raises(ModelError, match=r"J\[0,1\] = 0.2"):
            validate_model(spec)

    def test_nonpositive_diagonal_rejected(self):
        spec = ModelSpec.from_sizes((1, 1), [[1.0, 0.0], [0.0, 0.0]])
        with pytest.raises(ModelError, match="1"):
            validate_model(spec)

    def test_borderline_reported_not_pd(self):
        m = make_model((1, 1), [[1.0, 1.0], [1.0, 1.0]])
        assert not m.positive_definite

    def test_A_signs_match_J(self, rng):
        for _ in range(20):
            m = random_pd_model(rng, 3)
            assert np.allclose(m.A, m.A.T, atol=0)
            assert np.all(np.linalg.eigvalsh(m.A) > 0)


class TestParsing:
    def test_tiny_asymmetry_averaged(self):
        spec = parse_model({"sizes": [1, 1], "J": [[1, 0.3], [0.3 + 1e-13, 1]]})
        assert spec.J[0, 1] == spec.J[1, 0]

    def test_large_asymmetry_error(self):
        with pytest.raises(ModelError):
            parse_model({"sizes": [1, 1], "J": [[1, 0.3], [0.31, 1]]})

    def test_missing_field(self):
        with pytest.raises(ModelError):
            parse_model({"J": [[1]]})

    def test_h_defaults_to_zero(self):
        spec = parse_model({"sizes": [3], "J": [[1]]})
        np.testing.assert_array_equal(spec.h, [0.0])

    def test_load_roundtrip(self, tmp_path):
        doc = {"sizes": [2, 3], "J": [[1.0, 0.1], [0.1, 0.5]], "h": [0.0, -0.2]}
        p = tmp_path / "m.json"
        p.write_text(json.dumps(doc))
        spec = load_model(p)
        assert spec.to_dict() == doc

    def test_invalid_json(self, tmp_path):
        p = tmp_path / "m.json"
        p.write_text("{not json")
        with pytest.raises(ModelError):
            load_model(p)


class TestEnergy:
    def test_two_spin_example(self):
        m = make_model((2,), [[1.0]])
        assert energy_quadratic(SpinConfig(np.array([1, 1]), m.partition), m) == -1.0

    def test_single_self_term(self):
        m = make_model((1,), [[1.0]])
        assert energy_quadratic(np.array([-1.0]), m) == -0.5

    def test_g_examples(self):
        assert g_per_spin([0, 0], make_model((1, 1), [[1, 0.2], [0.2, 1]], [0.3, 0.1])) == 0.0
        assert g_per_spin([1, 1], make_model((1, 1), [[2, 0], [0, 2]])) == pytest.approx(0.5, abs=1e-15)
        assert g_per_spin([1], make_model((1,), [[1.0]], [0.5])) == pytest.approx(1.0, abs=1e-15)

    def test_hamiltonian_identity_random(self, rng):
        for _ in range(30):
            n = int(rng.integers(1, 4))
            sizes = tuple(int(s) for s in rng.integers(1, 4, size=n))
            m = random_pd_model(rng, n, sizes)
            sig = all_configs(m.partition.N)
            H = energy_quadratic(sig, m)
            g = g_per_spin(magnetizations(sig, m.partition), m)
            np.testing.assert_allclose(H, -m.partition.N * g, rtol=1e-12, atol=1e-12)

    def test_spin_flip_symmetry(self, rng):
        m = make_model((3, 2), [[1.0, 0.4], [0.4, 0.7]])
        sig = all_configs(5)
        np.testing.assert_array_equal(energy_quadratic(sig, m), energy_quadratic(-sig, m))

    def test_config_validation(self):
        p = SpeciesPartition((2, 1))
        with pytest.raises(ModelError):
            SpinConfig(np.array([1, 0, 1]), p)
        with pytest.raises(ModelError):
            SpinConfig(np.array([1, 1]), p)

    def test_g_domain(self):
        with pytest.raises(ModelError):
            g_per_spin([1.5], make_model((1,), [[1.0]]))
