from dataclasses import dataclass
from fractions import Fraction

from seedcodec.errors import ConfigError
from seedcodec.lfsr import TAPS

EXPONENT_BITS = 4
COEFF_BITS = 4


@dataclass(frozen=True)
class BlockConfig:
    """Block size ``c``, latent dimension ``p``, seed length ``k``, bits per element ``m``.

    Every block stores a k-bit seed, a 4-bit shared exponent and p 4-bit
    coefficients, so ``m * c == k + 4 + 4 * p`` must hold exactly. ``m`` may
    be omitted and is then derived from the other three.
    """

    c: int
    p: int
    k: int
    m: Fraction = None

    def __post_init__(self):
        for name in ("c", "p", "k"):
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, int) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.p >= self.c:
            raise ConfigError(f"latent dimension p={self.p} must be smaller than block size c={self.c}")
        if self.k not in TAPS:
            raise ConfigError(f"no LFSR taps for k={self.k}; supported {min(TAPS)}..{max(TAPS)}")
        budget = Fraction(self.block_bits, self.c)
        if self.m is None:
            object.__setattr__(self, "m", budget)
            return
        m = Fraction(self.m)
        if m != budget:
            raise ConfigError(
                f"bit budget violated: {m} * {self.c} != {self.k} + 4 + 4*{self.p} = {self.block_bits}"
            )
        object.__setattr__(self, "m", m)

    @property
    def block_bits(self) -> int:
        return self.k + EXPONENT_BITS + COEFF_BITS * self.p

    @property
    def num_seeds(self) -> int:
        return (1 << self.k) - 1

    def payload_bits(self, n_blocks: int) -> int:
        return n_blocks * self.block_bits

    def num_blocks(self, n_elements: int) -> int:
        return -(-n_elements // self.c)

    @classmethod
    def preset(cls, bits: int) -> "BlockConfig":
        try:
            c, p, k = PRESETS[bits]
        except KeyError:
            raise ConfigError(f"no preset for {bits} bits per element; choose from {sorted(PRESETS)}") from None
        return cls(c, p, k, Fraction(bits))

    def __str__(self):
        return f"C={self.c},P={self.p},K={self.k},M={self.m}"


PRESETS = {
    3: (12, 4, 16),
    4: (8, 3, 16),
}
