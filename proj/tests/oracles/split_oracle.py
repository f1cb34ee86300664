#!/usr/bin/env python3
"""Reference splitmix64 stream and Fisher-Yates split.

Prints the vectors frozen in tests/test_data.cpp. Written from the published
splitmix64 constants, independent of the C++ sources.
"""

MASK = (1 << 64) - 1


class SplitMix64:
    def __init__(self, seed):
        self.state = seed & MASK

    def next(self):
        self.state = (self.state + 0x9E3779B97F4A7C15) & MASK
        z = self.state
        z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
        z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
        return z ^ (z >> 31)


def split(ids, n_train, n_val, n_test, seed):
    ids = sorted(ids)
    rng = SplitMix64(seed)
    for i in range(len(ids) - 1, 0, -1):
        j = rng.next() % (i + 1)
        ids[i], ids[j] = ids[j], ids[i]
    return (ids[:n_train], ids[n_train:n_train + n_val],
            ids[n_train + n_val:n_train + n_val + n_test])


def main():
    for seed in (0, 1234567):
        g = SplitMix64(seed)
        print(f"stream seed={seed}:", ", ".join(f"0x{g.next():016x}" for _ in range(5)))
    letters = [chr(c) for c in range(ord("a"), ord("z") + 1)]
    print("a..z 3/1/1 seed 0:", split(letters, 3, 1, 1, 0))
    print("a..e 3/1/1 seed 0:", split(letters[:5], 3, 1, 1, 0))
    imgs = [f"ISIC_{i:07d}" for i in range(10)]
    print("ISIC x10 6/2/2 seed 42:", split(imgs, 6, 2, 2, 42))


if __name__ == "__main__":
    main()
