"""Independent generator for the dataset golden file.

Re-implements SplitMix64 and the ten target functions from their documented
definitions (no code shared with the C++ library) and writes the CSV that
`generate(7, 16)` + `save_csv` must reproduce byte for byte.
"""
import sys

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

    def uniform(self):
        return (self.next() >> 11) * 2.0 ** -53


def targets(x, y):
    u = x * (1.0 - y)
    v = (1.0 - x) * y
    return [x / 2.0 + y / 2.0, x * (1.0 - y), x * y, x + y - x * y, u + v - u * v,
            x, y, 1.0 - x, 1.0 - y, 0.7]


def main(seed=7, n=16):
    rng = SplitMix64(seed)
    test = max(1, int(n / 10 + 0.5))
    lines = ["x,y," + ",".join("f%d" % k for k in range(10)) + ",split"]
    for i in range(n):
        x = rng.uniform()
        y = rng.uniform()
        vals = [x, y] + targets(x, y)
        split = "train" if i < n - test else "test"
        lines.append(",".join("%.17g" % v for v in vals) + "," + split)
    sys.stdout.write("\n".join(lines) + "\n")


if __name__ == "__main__":
    main()
