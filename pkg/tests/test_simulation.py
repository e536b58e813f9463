import hashlib
import itertools

import numpy as np
import pytest

from twentyq.experiment import binomial_reference
from twentyq.matrix import correct_count_histogram, hamming_distance_matrix
from twentyq.simulation import PopulationSpec, gen_clones, gen_irt, gen_uniform, generate, sample_distinct_pairs

# regression pins: the row-major RNG stream defines each matrix
FROZEN = {
    "uniform": "80b9142ca11e7856607598cda5f9396c3f18cddc3787ba93e520d9971211ae7a",
    "irt": "74618a00d55c7fca500ce4b87a9717bcc94f263e65ba6470c67e7bcb784f5bd8",
    "clones": "415d639a57db319fbd99622a91c7cf0516075c9220f09b5261b9bc1bcf1316e8",
}


@pytest.mark.parametrize("kind", sorted(FROZEN))
def test_generators_are_hash_stable(kind):
    spec = PopulationSpec(kind, 6, 16, seed=42, families=2, flip_rate=0.1)
    assert generate(spec) == generate(spec)
    assert hashlib.sha256(generate(spec).bits.tobytes()).hexdigest() == FROZEN[kind]


def test_spec_validation():
    with pytest.raises(ValueError):
        PopulationSpec("clones", 4, 10, seed=0, families=5)
    with pytest.raises(ValueError):
        PopulationSpec("uniform", 4, 10, seed=0, flip_rate=1.5)
    with pytest.raises(ValueError):
        PopulationSpec("nope", 4, 10, seed=0)
    with pytest.raises(ValueError):
        PopulationSpec("uniform", 9, 3, seed=0, distinct=True)
    with pytest.raises(ValueError):
        gen_irt(PopulationSpec("uniform", 4, 10, seed=0))


def test_uniform_concentration():
    m = gen_uniform(PopulationSpec("uniform", 1000, 100, seed=1))
    frac = m.bits.mean(axis=0)
    assert ((frac >= 0.45) & (frac <= 0.55)).sum() >= 95
    d = hamming_distance_matrix(m)
    off = d[np.triu_indices(1000, 1)]
    assert 45 <= off.mean() <= 55


def test_uniform_distinct_rows():
    m = gen_uniform(PopulationSpec("uniform", 64, 6, seed=3, distinct=True))
    assert len({r.tobytes() for r in m.bits}) == 64


def test_irt_zero_spread_is_fair_coin():
    m = gen_irt(PopulationSpec("irt", 22, 5000, seed=2, sigma_skill=0, sigma_difficulty=0))
    assert abs(m.bits.mean() - 0.5) < 0.01
    assert binomial_reference(correct_count_histogram(m), 22).tv < 0.05


def test_irt_wide_difficulty_is_bimodal():
    irt = gen_irt(PopulationSpec("irt", 22, 5000, seed=4, sigma_skill=1, sigma_difficulty=4))
    uni = gen_uniform(PopulationSpec("uniform", 22, 5000, seed=4))
    h = correct_count_histogram(irt)
    assert h[:3].sum() > 0.15 and h[-3:].sum() > 0.15
    assert h[:3].sum() + h[-3:].sum() > h[9:14].sum()
    tv_irt = binomial_reference(h, 22).tv
    tv_uni = binomial_reference(correct_count_histogram(uni), 22).tv
    assert tv_irt > tv_uni


def test_irt_symmetric_mean_rate():
    # the sample mean of the skills dominates the deviation, so use many models
    m = gen_irt(PopulationSpec("irt", 1000, 5000, seed=6, sigma_skill=1, sigma_difficulty=1.5))
    assert abs(m.bits.mean() - 0.5) < 0.02


def family_distances(m, F):
    d = hamming_distance_matrix(m)
    L = m.n_models
    clone_pairs, base_pairs, between = [], [], []
    for i, j in itertools.combinations(range(L), 2):
        if i % F != j % F:
            between.append(d[i, j])
        elif i < F:
            base_pairs.append(d[i, j])
        else:
            clone_pairs.append(d[i, j])
    return np.mean(clone_pairs), np.mean(base_pairs), np.mean(between)


def test_clones_without_flips_are_copies():
    m = gen_clones(PopulationSpec("clones", 12, 200, seed=9, families=3))
    assert len({r.tobytes() for r in m.bits}) == 3
    clone, base, _ = family_distances(m, 3)
    assert clone == 0 and base == 0


def test_clones_half_flip_is_independent():
    m = gen_clones(PopulationSpec("clones", 24, 1000, seed=10, families=4, flip_rate=0.5))
    clone, base, between = family_distances(m, 4)
    assert abs(clone - between) / between < 0.10
    assert abs(base - between) / between < 0.10


def test_clones_small_flip_distances():
    eps, K = 0.01, 1000
    m = gen_clones(PopulationSpec("clones", 22, K, seed=11, families=4, flip_rate=eps))
    clone, base, between = family_distances(m, 4)
    assert clone == pytest.approx(2 * eps * (1 - eps) * K, abs=5)  # 19.8
    assert base == pytest.approx(eps * K, abs=4)
    assert between == pytest.approx(K / 2, abs=30)


def test_sample_distinct_pairs():
    a, b = sample_distinct_pairs(5000, 3, seed=0)
    assert not (a == b).all(axis=1).any()
    a2, b2 = sample_distinct_pairs(5000, 3, seed=0)
    assert np.array_equal(a, a2) and np.array_equal(b, b2)
