"""Gene representation and the letter-pair grammar.

A gene is an ACGT string plus a fixed start position.  Pairs of letters
decode to actions: the first letter picks a direction, the second a verb
(move or attack).  Genes are immutable; mutation and gene add/remove
events build new genes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .engine import ATTACK, CARDINALS, DIR_CODE, MOVE, Action, decode_action_code

ALPHABET = "ACGT"
_LETTER_CODE = {c: i for i, c in enumerate(ALPHABET)}
# Maps byte value of A/C/G/T -> 0..3; other bytes -> 255 (invalid).
_BYTE_LUT = np.full(256, 255, dtype=np.uint8)
for _c, _i in _LETTER_CODE.items():
    _BYTE_LUT[ord(_c)] = _i
_CODE_BYTES = np.frombuffer(ALPHABET.encode(), dtype=np.uint8)

GENE_LENGTH = 512


@dataclass(frozen=True)
class TokenTable:
    """Letter-to-action mapping: all four letters get a distinct direction,
    and two letters each map to move and attack."""

    direction_of: dict[str, str]
    verb_of: dict[str, str]

    def __post_init__(self) -> None:
        if set(self.direction_of) != set(ALPHABET) or set(self.verb_of) != set(ALPHABET):
            raise ValueError("token table must cover exactly A, C, G, T")
        if sorted(self.direction_of.values()) != sorted(CARDINALS):
            raise ValueError("direction map must be a bijection onto the four cardinals")
        verbs = list(self.verb_of.values())
        if verbs.count(MOVE) != 2 or verbs.count(ATTACK) != 2:
            raise ValueError("verb map must send two letters to move and two to attack")

    @property
    def dir_lut(self) -> np.ndarray:
        lut = np.empty(4, dtype=np.uint8)
        for letter, card in self.direction_of.items():
            lut[_LETTER_CODE[letter]] = DIR_CODE[card]
        return lut

    @property
    def attack_lut(self) -> np.ndarray:
        lut = np.empty(4, dtype=np.uint8)
        for letter, verb in self.verb_of.items():
            lut[_LETTER_CODE[letter]] = 1 if verb == ATTACK else 0
        return lut


DEFAULT_TOKEN_TABLE = TokenTable(
    direction_of={"A": "up", "C": "right", "G": "down", "T": "left"},
    verb_of={"A": "move", "C": "move", "G": "attack", "T": "attack"},
)
_DEFAULT_DIR_LUT = DEFAULT_TOKEN_TABLE.dir_lut
_DEFAULT_ATTACK_LUT = DEFAULT_TOKEN_TABLE.attack_lut


def _seq_codes(sequence: str) -> np.ndarray:
    raw = np.frombuffer(sequence.encode("ascii", "replace"), dtype=np.uint8)
    codes = _BYTE_LUT[raw]
    if codes.size and codes.max() > 3:
        bad = sequence[int(np.argmax(codes > 3))]
        raise ValueError(f"sequence contains {bad!r}; only A, C, G, T are allowed")
    return codes


def encode_gene(sequence: str, table: TokenTable = DEFAULT_TOKEN_TABLE) -> np.ndarray:
    """Compile a sequence to engine action codes (one uint8 per action).

    Total on ACGT input: every letter pair yields an action, a trailing
    unpaired letter is ignored.
    """
    codes = _seq_codes(sequence)
    n = len(codes) // 2
    dirs = table.dir_lut[codes[: 2 * n : 2]]
    attacks = table.attack_lut[codes[1 : 2 * n : 2]]
    return (dirs + 4 * attacks).astype(np.uint8)


def decode_gene(sequence: str, table: TokenTable = DEFAULT_TOKEN_TABLE) -> list[Action]:
    """Decode a sequence to its action list (floor(len/2) actions)."""
    return [decode_action_code(int(code)) for code in encode_gene(sequence, table)]


@dataclass(frozen=True)
class Gene:
    """An action-encoding sequence with its fixed start position."""

    sequence: str
    start: tuple[int, int]
    _codes: np.ndarray | None = field(default=None, repr=False, compare=False)

    @property
    def codes(self) -> np.ndarray:
        codes = self._codes
        if codes is None:
            codes = encode_gene(self.sequence)
            object.__setattr__(self, "_codes", codes)
        return codes


Genome = list[Gene]

# Numbered start positions 1-4: the grid corners in the fixed order
# used by the "corners" scheme (position 1 is also the "same" start).
def corner_positions(grid_size: int) -> tuple[tuple[int, int], ...]:
    n = grid_size - 1
    return ((0, 0), (n, n), (0, n), (n, 0))


def resolve_start(
    scheme: str,
    gene_index: int,
    grid_size: int,
    rng: np.random.Generator,
) -> tuple[int, int]:
    """Start position for a gene created at ``gene_index`` under a scheme.

    same: everyone at position 1.  corners: numbered corners cycled in
    creation order.  random: one uniform on-grid draw, made at creation
    and fixed for the gene's lifetime.
    """
    corners = corner_positions(grid_size)
    if scheme == "same":
        return corners[0]
    if scheme == "corners":
        return corners[gene_index % 4]
    if scheme == "random":
        return (int(rng.integers(grid_size)), int(rng.integers(grid_size)))
    raise ValueError(f"unknown start scheme {scheme!r}")


def random_sequence(rng: np.random.Generator, length: int = GENE_LENGTH) -> str:
    return _CODE_BYTES[rng.integers(0, 4, size=length)].tobytes().decode("ascii")


def random_gene(
    scheme: str,
    gene_index: int,
    grid_size: int,
    rng: np.random.Generator,
    length: int = GENE_LENGTH,
) -> Gene:
    # Draw order (sequence, then position) is fixed for reproducibility.
    seq = random_sequence(rng, length)
    return Gene(seq, resolve_start(scheme, gene_index, grid_size, rng))


def point_mutate(sequence: str, rate: float, rng: np.random.Generator) -> str:
    """Substitute each site independently with probability ``rate``.

    A mutated site always changes: the replacement is uniform over the
    three other letters.  Length is preserved.
    """
    if not 0.0 <= rate <= 1.0:
        raise ValueError("rate must be in [0, 1]")
    codes = _seq_codes(sequence)
    hits = rng.random(len(codes)) < rate
    n_hits = int(hits.sum())
    if n_hits == 0:
        return sequence
    offsets = rng.integers(1, 4, size=n_hits).astype(np.uint8)
    codes = codes.copy()
    codes[hits] = (codes[hits] + offsets) % 4
    return _CODE_BYTES[codes].tobytes().decode("ascii")


def apply_gene_events(
    genome: Genome,
    p_add: float,
    p_remove: float,
    origin: str,
    start_scheme: str,
    grid_size: int,
    rng: np.random.Generator,
) -> Genome:
    """Sample the independent remove and add events and apply them.

    Removal is applied first (a no-op at one gene), then addition.  A
    duplication copies a uniformly chosen gene's sequence; under the
    random scheme the copy inherits the source's start position, otherwise
    the start follows the scheme at the new gene's creation index.  A de
    novo gene is a fresh random sequence with a scheme-resolved start.
    The new gene always goes to the end of the list (lowest priority).
    """
    if origin not in ("duplication", "de_novo"):
        raise ValueError(f"unknown gene origin {origin!r}")
    genes = list(genome)
    if rng.random() < p_remove:
        if len(genes) > 1:
            del genes[int(rng.integers(len(genes)))]
    if rng.random() < p_add:
        index = len(genes)
        if origin == "duplication":
            source = genes[int(rng.integers(len(genes)))]
            if start_scheme == "random":
                start = source.start
            else:
                start = resolve_start(start_scheme, index, grid_size, rng)
            genes.append(Gene(source.sequence, start, source.codes))
        else:
            genes.append(random_gene(start_scheme, index, grid_size, rng))
    return genes


def genome_to_text(genome: Genome) -> str:
    """Serialize one gene per line as ``start_x,start_y,SEQUENCE``."""
    return "".join(f"{g.start[0]},{g.start[1]},{g.sequence}\n" for g in genome)


def genome_from_text(text: str) -> Genome:
    genes = []
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.strip()
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != 3:
            raise ValueError(f"line {lineno}: expected start_x,start_y,SEQUENCE")
        x, y, seq = parts
        gene = Gene(seq, (int(x), int(y)))
        gene.codes  # validates the alphabet eagerly
        genes.append(gene)
    return genes
