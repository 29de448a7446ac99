import math

import numpy as np
import pytest

from expmc import (
    Binomial,
    DomainError,
    Exponential,
    Gaussian,
    PackingError,
    Poisson,
    build_packing,
    delta_probability,
    kappa,
    kl_to_null,
    load_packing,
    numerical_rank,
    save_packing,
    uniform_scheme,
    verify_conditions,
)


class TestKappa:
    def test_formula_example(self):
        val = kappa(alpha=0.1, m1=100, r=2, gamma=1.0, sigma_hi_sq=1.0, n=10**4)
        assert val == pytest.approx(0.022360679774997897, rel=1e-12)

    def test_large_n_takes_sqrt_branch(self):
        val = kappa(alpha=0.1, m1=16, r=2, gamma=1.0, sigma_hi_sq=1.0, n=10**8)
        assert val == pytest.approx(math.sqrt(0.1 * 16 * 2) / (2 * 10**4), rel=1e-12)
        assert val < 0.5

    def test_tiny_n_clips_at_half(self):
        assert kappa(alpha=0.1, m1=100, r=3, gamma=1.0, sigma_hi_sq=1.0, n=1) == 0.5

    def test_alpha_range_enforced(self):
        for bad in (0.0, 0.125, 0.5):
            with pytest.raises(ValueError):
                kappa(alpha=bad, m1=8, r=1, gamma=1.0, sigma_hi_sq=1.0, n=10)


class TestBuildPacking:
    def build(self, m1=8, m2=8, r=2, n=500, seed=0, **kw):
        return build_packing(
            m1, m2, r, gamma=1.0, alpha=0.1, sigma_hi_sq=1.0, n=n,
            rng=np.random.default_rng(seed), **kw,
        )

    def test_cardinality_guarantee(self):
        packing = self.build()
        assert packing.cardinality >= 2**2 + 1

    def test_zero_matrix_first(self):
        packing = self.build()
        assert np.allclose(packing.members[0], 0.0)

    def test_entries_and_rank(self):
        packing = self.build()
        amp = packing.kappa * packing.gamma
        for mat in packing.members:
            assert np.all(np.isclose(mat, 0.0) | np.isclose(mat, amp))
            assert numerical_rank(mat) <= packing.r

    def test_pairwise_distances_exhaustive(self):
        packing = self.build()
        thresh = 8 * 8 * packing.kappa**2 * packing.gamma**2 / 16.0
        mats = packing.members
        for i in range(len(mats)):
            for j in range(i + 1, len(mats)):
                assert np.linalg.norm(mats[i] - mats[j]) ** 2 >= thresh - 1e-12

    def test_difference_rank_bounded(self):
        packing = self.build()
        mats = packing.members
        for i in range(0, len(mats), 3):
            for j in range(i + 1, len(mats), 3):
                assert numerical_rank(mats[i] - mats[j]) <= packing.r

    def test_column_padding_when_rank_not_dividing(self):
        packing = build_packing(
            8, 7, 3, gamma=1.0, alpha=0.1, sigma_hi_sq=1.0, n=100,
            rng=np.random.default_rng(1),
        )
        for mat in packing.members:
            assert mat.shape == (8, 7)
            assert np.allclose(mat[:, 6:], 0.0)  # one zero-padded column

    def test_cap_respected(self):
        packing = self.build(max_cardinality=3)
        assert packing.cardinality == 3

    def test_unreachable_target_raises_with_achieved(self):
        with pytest.raises(PackingError) as err:
            self.build(max_attempts=1)
        assert 1 <= err.value.achieved <= 2

    def test_rank_validation(self):
        with pytest.raises(ValueError):
            self.build(r=9)


class TestKlToNull:
    def test_gaussian_quadratic_identity(self):
        # Uniform 2x2, all entries one, n = 4: KL = n * mean(x^2)/2 = 2.
        scheme = uniform_scheme(2, 2)
        val = kl_to_null(Gaussian(sigma=1.0), scheme, np.ones((2, 2)), n=4)
        assert val == pytest.approx(2.0, rel=1e-12)

    def test_zero_matrix(self):
        scheme = uniform_scheme(3, 3)
        assert kl_to_null(Poisson(), scheme, np.zeros((3, 3)), n=10) == 0.0

    def test_poisson_single_entry_direct_substitution(self):
        m1 = m2 = 4
        scheme = uniform_scheme(m1, m2)
        x = np.zeros((m1, m2))
        amp = 0.35
        x[1, 2] = amp
        val = kl_to_null(Poisson(), scheme, x, n=20)
        expected = 20 * (math.exp(amp) * amp - math.exp(amp) + 1.0) / (m1 * m2)
        assert val == pytest.approx(expected, rel=1e-12)

    def test_nonnegative_and_zero_only_at_null(self):
        rng = np.random.default_rng(2)
        scheme = uniform_scheme(4, 4)
        fam = Binomial(trials=2)
        x = rng.uniform(-1, 1, (4, 4))
        assert kl_to_null(fam, scheme, x, n=7) > 0.0

    def test_exponential_rejected(self):
        scheme = uniform_scheme(2, 2)
        with pytest.raises(DomainError):
            kl_to_null(Exponential(), scheme, np.full((2, 2), -1.0), n=5)


class TestVerifyConditions:
    def make(self, n, seed=3, family=None, m1=16, m2=16, r=2):
        family = family or Gaussian(sigma=1.0)
        sigma_hi_sq = family.variance_bounds(
            __import__("expmc").ParameterBox.symmetric(1.0)
        )[1]
        packing = build_packing(
            m1, m2, r, gamma=1.0, alpha=0.1, sigma_hi_sq=sigma_hi_sq, n=n,
            rng=np.random.default_rng(seed),
        )
        scheme = uniform_scheme(m1, m2)
        return packing, verify_conditions(packing, family, scheme, n)

    def test_gaussian_16x16_passes(self):
        _, report = self.make(n=2000)
        assert report.passed, report.failures

    def test_doubling_n_keeps_divergence_budget(self):
        for n in (500, 1000, 2000, 4000):
            _, report = self.make(n=n)
            assert "kl_average" not in report.failures

    def test_member_curvature_cap(self):
        _, report = self.make(n=1500)
        assert max(report.kl_values) <= report.kl_member_cap * (1 + 1e-9)

    def test_poisson_also_valid(self):
        # Larger curvature at the box edge keeps the budget comfortable.
        _, report = self.make(n=800, family=Poisson())
        assert "kl_average" not in report.failures

    def test_delta_probability_limit(self):
        assert delta_probability(1e-9, 400, 3) == pytest.approx(1.0, abs=1e-3)
        assert delta_probability(0.1, 16, 2) < 1.0

    def test_report_values_populated(self):
        packing, report = self.make(n=1000)
        assert report.cardinality == packing.cardinality
        assert report.min_pairwise_sq >= report.separation_threshold - 1e-12
        assert report.lower_bound_value > 0
        assert 0 < report.delta_value < 1


class TestPersistence:
    def test_roundtrip_bit_identical(self, tmp_path):
        packing = build_packing(
            8, 8, 2, gamma=1.0, alpha=0.1, sigma_hi_sq=1.0, n=300,
            rng=np.random.default_rng(5),
        )
        save_packing(packing, tmp_path / "p", seed=5)
        loaded = load_packing(tmp_path / "p")
        assert loaded.cardinality == packing.cardinality
        assert loaded.kappa == packing.kappa
        for a, b in zip(packing.members, loaded.members):
            assert np.array_equal(a, b)
        # Saving the loaded packing reproduces the original files exactly.
        save_packing(loaded, tmp_path / "q", seed=5)
        for name in sorted(p.name for p in (tmp_path / "p").iterdir()):
            assert (tmp_path / "p" / name).read_bytes() == (tmp_path / "q" / name).read_bytes()

    def test_manifest_contents(self, tmp_path):
        import json

        packing = build_packing(
            8, 8, 2, gamma=1.0, alpha=0.1, sigma_hi_sq=1.0, n=300,
            rng=np.random.default_rng(6),
        )
        save_packing(packing, tmp_path / "p", seed=6)
        manifest = json.loads((tmp_path / "p" / "manifest.json").read_text())
        assert manifest["alpha"] == packing.alpha
        assert manifest["kappa"] == packing.kappa
        assert manifest["r"] == 2 and manifest["gamma"] == 1.0
        assert manifest["seed"] == 6
