"""Verification tests for the stratified generator, CSV round-trip, and folds."""

import numpy as np
import pytest

from drotrain.datasets import (
    MAJORITY,
    MINORITY,
    Dataset,
    SyntheticConfig,
    generate,
    kfold_indices,
    read_csv,
    write_csv,
)

# Central 99% interval for Binomial(2000, 0.05), from the exact quantile
# function (ppf at 0.005 and 0.995): [76, 126].
BINOM_2000_005_99 = (76, 126)


class TestConfigValidation:
    def test_fraction_bounds(self):
        with pytest.raises(ValueError):
            SyntheticConfig(minority_fraction=0.0)
        with pytest.raises(ValueError):
            SyntheticConfig(minority_fraction=1.0)

    def test_radius_ordering(self):
        with pytest.raises(ValueError):
            SyntheticConfig(minority_radius=3.0, majority_radius=2.0)
        with pytest.raises(ValueError):
            SyntheticConfig(minority_radius=0.0)

    def test_feature_dim_holds_class_centres(self):
        with pytest.raises(ValueError):
            SyntheticConfig(n_features=3, n_classes=4)

    def test_noise_rates_bounded(self):
        with pytest.raises(ValueError):
            SyntheticConfig(noise_minority=1.5)
        with pytest.raises(ValueError):
            SyntheticConfig(noise_majority=-0.1)


class TestGenerate:
    def test_deterministic(self):
        cfg = SyntheticConfig(n_samples=300, n_features=6, n_classes=3)
        a = generate(cfg, 17)
        b = generate(cfg, 17)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)
        assert a.groups == b.groups
        assert a.case_ids == b.case_ids

    def test_shapes_and_tags(self):
        cfg = SyntheticConfig(n_samples=120, n_features=5, n_classes=4)
        ds = generate(cfg, 3)
        assert ds.features.shape == (120, 5)
        assert ds.labels.shape == (120,)
        assert set(ds.groups) <= {MAJORITY, MINORITY}
        assert ds.labels.min() >= 0 and ds.labels.max() < 4
        assert len(set(ds.case_ids)) == 120

    def test_minority_count_within_binomial_interval(self):
        """Group assignment is i.i.d. with the configured prevalence, so the
        minority count must land in the central 99% binomial interval."""
        cfg = SyntheticConfig(n_samples=2000, n_features=6, n_classes=3, minority_fraction=0.05)
        for seed in (0, 1, 2):
            ds = generate(cfg, seed)
            count = sum(1 for g in ds.groups if g == MINORITY)
            assert BINOM_2000_005_99[0] <= count <= BINOM_2000_005_99[1]

    def test_prevalence_map(self):
        cfg = SyntheticConfig(n_samples=500, minority_fraction=0.3, n_features=6, n_classes=3)
        ds = generate(cfg, 5)
        prev = ds.prevalence()
        assert abs(sum(prev.values()) - 1.0) < 1e-12
        assert prev[MINORITY] == ds.groups.count(MINORITY) / 500

    def test_group_independent_when_unshifted(self):
        """With shift 0 and equal radii the two groups are generated from
        identical cluster centres: regenerating with the same seed but a
        different minority fraction changes only the group tags, never the
        features or labels.  Group assignment is therefore exactly
        independent of everything the model sees."""
        base = dict(n_samples=400, n_features=6, n_classes=3, shift=0.0,
                    majority_radius=2.0, minority_radius=2.0)
        a = generate(SyntheticConfig(minority_fraction=0.2, **base), 23)
        b = generate(SyntheticConfig(minority_fraction=0.8, **base), 23)
        np.testing.assert_array_equal(a.features, b.features)
        np.testing.assert_array_equal(a.labels, b.labels)
        assert a.groups != b.groups

    def test_minority_clusters_shifted_and_tighter(self):
        """Minority class centres sit in a translated, more compact region."""
        cfg = SyntheticConfig(
            n_samples=6000, n_features=6, n_classes=3, minority_fraction=0.5,
            majority_radius=3.0, minority_radius=1.0, shift=6.0,
        )
        ds = generate(cfg, 9)
        is_min = np.array([g == MINORITY for g in ds.groups])
        maj_mean = ds.features[~is_min].mean(axis=0)
        min_mean = ds.features[is_min].mean(axis=0)
        # The translation dominates: group means separated by roughly the
        # shift magnitude (6), far beyond sampling noise.
        assert np.linalg.norm(min_mean - maj_mean) > 4.0
        # Tighter radius: minority class centres are closer to each other.
        def centre_spread(mask):
            centres = [ds.features[mask & (ds.labels == c)].mean(axis=0) for c in range(3)]
            return max(
                np.linalg.norm(ci - cj) for i, ci in enumerate(centres) for cj in centres[:i]
            )
        assert centre_spread(is_min) < centre_spread(~is_min)

    def test_full_label_noise_flips_every_label(self):
        """Noise rate 1 replaces each label with a different class; the RNG
        drawing order keeps features identical to the noise-free run."""
        base = dict(n_samples=200, n_features=6, n_classes=3, minority_fraction=0.25)
        clean = generate(SyntheticConfig(noise_majority=0.0, noise_minority=0.0, **base), 31)
        noisy = generate(SyntheticConfig(noise_majority=1.0, noise_minority=1.0, **base), 31)
        np.testing.assert_array_equal(clean.features, noisy.features)
        assert np.all(clean.labels != noisy.labels)


class TestCsvRoundTrip:
    def test_bytes_stable(self, tmp_path):
        cfg = SyntheticConfig(n_samples=50, n_features=4, n_classes=3)
        ds = generate(cfg, 13)
        p1 = tmp_path / "a.csv"
        p2 = tmp_path / "b.csv"
        write_csv(ds, p1)
        write_csv(read_csv(p1), p2)
        assert p1.read_bytes() == p2.read_bytes()

    def test_values_exact(self, tmp_path):
        cfg = SyntheticConfig(n_samples=40, n_features=5, n_classes=3)
        ds = generate(cfg, 14)
        path = tmp_path / "ds.csv"
        write_csv(ds, path)
        back = read_csv(path)
        np.testing.assert_array_equal(ds.features, back.features)
        np.testing.assert_array_equal(ds.labels, back.labels)
        assert ds.groups == back.groups
        assert ds.case_ids == back.case_ids

    def test_header_validated(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("case,group,label,f0\nc0,majority,0,1.0\n")
        with pytest.raises(ValueError):
            read_csv(path)

    def test_field_count_validated(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("case_id,group,label,f0\nc0,majority,0\n")
        with pytest.raises(ValueError):
            read_csv(path)

    def test_empty_rejected(self, tmp_path):
        path = tmp_path / "empty.csv"
        path.write_text("case_id,group,label,f0\n")
        with pytest.raises(ValueError):
            read_csv(path)


class TestKfoldIndices:
    def test_exact_division(self):
        splits = kfold_indices(10, 5, seed=0)
        assert len(splits) == 5
        val_sizes = [len(val) for _, val in splits]
        assert val_sizes == [2, 2, 2, 2, 2]
        all_val = np.concatenate([val for _, val in splits])
        assert sorted(all_val.tolist()) == list(range(10))

    def test_remainder_spread(self):
        splits = kfold_indices(7, 5, seed=1)
        sizes = sorted(len(val) for _, val in splits)
        assert sizes == [1, 1, 1, 2, 2]

    def test_partition_property(self):
        rng = np.random.default_rng(2)
        for _ in range(20):
            n = int(rng.integers(5, 60))
            k = int(rng.integers(2, min(n, 9)))
            splits = kfold_indices(n, k, seed=int(rng.integers(1 << 30)))
            all_val = np.concatenate([val for _, val in splits])
            assert sorted(all_val.tolist()) == list(range(n))
            for train, val in splits:
                assert set(train) | set(val) == set(range(n))
                assert not set(train) & set(val)
                assert max(len(v) for _, v in splits) - min(len(v) for _, v in splits) <= 1

    def test_single_fold_holdout(self):
        (train, val), = kfold_indices(50, 1, seed=3)
        assert len(val) == 10
        assert len(train) == 40
        assert not set(train) & set(val)
        assert sorted(np.concatenate([train, val]).tolist()) == list(range(50))

    def test_deterministic(self):
        a = kfold_indices(33, 4, seed=9)
        b = kfold_indices(33, 4, seed=9)
        for (ta, va), (tb, vb) in zip(a, b):
            np.testing.assert_array_equal(ta, tb)
            np.testing.assert_array_equal(va, vb)

    def test_invalid_args(self):
        with pytest.raises(ValueError):
            kfold_indices(5, 6, seed=0)
        with pytest.raises(ValueError):
            kfold_indices(1, 1, seed=0)


class TestDatasetContainer:
    def test_subset(self):
        ds = generate(SyntheticConfig(n_samples=30, n_features=5, n_classes=3), 19)
        sub = ds.subset([4, 7, 2])
        np.testing.assert_array_equal(sub.features, ds.features[[4, 7, 2]])
        assert sub.case_ids == [ds.case_ids[4], ds.case_ids[7], ds.case_ids[2]]

    def test_alignment_validated(self):
        with pytest.raises(ValueError):
            Dataset(np.zeros((3, 2)), np.zeros(2, dtype=np.int64), ["a"] * 3, ["c"] * 3)
