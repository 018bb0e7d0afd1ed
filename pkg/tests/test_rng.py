import numpy as np

from ldot.rng import CounterStream, key_from_seed, philox4x64


def test_block_function_matches_numpy_philox():
    key = key_from_seed(99)
    for start in ([0, 0, 0, 0], [5, 0, 7, 3], [2 ** 64 - 1, 0, 1, 0]):
        bg = np.random.Philox(key=key, counter=np.array(start, dtype=np.uint64))
        want = bg.random_raw(4)
        # numpy increments the counter before producing a block
        c0 = start[0] + 1
        ctr = np.array([c0 % 2 ** 64, start[1] + c0 // 2 ** 64, start[2], start[3]], dtype=np.uint64)
        assert np.array_equal(philox4x64(ctr, key), want)


def test_stream_words_are_addressable():
    s = CounterStream(7, tag=3)
    full = s.words([0, 1, 2], 10)
    assert np.array_equal(s.words([1], 10)[0], full[1])
    assert np.array_equal(s.words([2], 6)[0], full[2, :6])
    assert not np.array_equal(CounterStream(7, tag=4).words([0], 10), full[:1])
    assert not np.array_equal(CounterStream(8, tag=3).words([0], 10), full[:1])


def test_uniforms_and_normals():
    s = CounterStream(1)
    u = s.uniforms(np.arange(4), 50_000)
    assert u.min() > 0 and u.max() < 1
    assert abs(u.mean() - 0.5) < 5 * np.sqrt(1 / 12 / u.size)
    z = s.normals([0], 100_000)[0]
    assert abs(z.mean()) < 5 / np.sqrt(z.size)
    assert abs(z.var() - 1) < 5 * np.sqrt(2 / z.size)
