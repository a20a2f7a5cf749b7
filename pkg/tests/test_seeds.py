import numpy as np

from dpgrid.seeds import as_generator, derive_rng, derive_seed


def test_same_labels_same_stream():
    a = derive_rng(7, "node", "pmu1").random(16)
    b = derive_rng(7, "node", "pmu1").random(16)
    assert np.array_equal(a, b)


def test_different_labels_different_streams():
    a = derive_rng(7, "node", "pmu1").random(16)
    b = derive_rng(7, "node", "pmu2").random(16)
    c = derive_rng(8, "node", "pmu1").random(16)
    assert not np.array_equal(a, b)
    assert not np.array_equal(a, c)


def test_label_types_distinguished():
    # "1" the string and 1 the int must not collide.
    a = derive_rng(0, "run", 1).random(8)
    b = derive_rng(0, "run", "1").random(8)
    assert not np.array_equal(a, b)


def test_derive_seed_stable_and_label_sensitive():
    assert derive_seed(3, "x") == derive_seed(3, "x")
    assert derive_seed(3, "x") != derive_seed(3, "y")
    assert 0 <= derive_seed(3, "x") < 2**64


def test_negative_seed_accepted():
    derive_rng(-5, "a").random(1)
    assert derive_seed(-5, "a") == derive_seed(-5, "a")


def test_as_generator_passthrough():
    gen = np.random.default_rng(0)
    assert as_generator(gen) is gen
    fresh = as_generator(123)
    assert isinstance(fresh, np.random.Generator)
