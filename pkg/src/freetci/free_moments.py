"""Mixed moments of free families from their marginal distributions.

Words are sequences of letters ``i`` or ``i*`` over a finite alphabet
(text form ``"1 2* 1"``).  Two independent evaluation routes are kept
permanently, and tests cross-check them:

* the centering recursion: for an alternating word ``b_1 ... b_r`` with
  marginal means ``m_j``, vanishing of centered alternating products gives

      tau(w) = - sum_{T proper subset} (-1)^{r - |T|}
                   (prod_{j not in T} m_j) tau(merge(w_T)),

  which needs nothing but marginal moments and terminates because every
  ``w_T`` is strictly shorter;
* Wick-type combinatorics: non-crossing pair partitions for standard
  semicircular letters and free-group reduction for Haar unitary letters.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from . import measures
from .errors import ConfigError

MAX_WORD_DEGREE = 8


@dataclass(frozen=True)
class Word:
    """A word in the letters; ``letters`` is a tuple of (index, starred)."""

    letters: tuple

    def __post_init__(self):
        for idx, star in self.letters:
            if not (isinstance(idx, int) and idx >= 1 and isinstance(star, bool)):
                raise ConfigError("letters must be (positive index, bool) pairs")

    def __str__(self):
        return format_word(self)

    @property
    def degree(self):
        return len(self.letters)


def parse_word(text):
    """Parse ``"1 2* 1"`` into a :class:`Word`."""
    letters = []
    for tok in str(text).split():
        star = tok.endswith("*")
        body = tok[:-1] if star else tok
        if not body.isdigit() or int(body) < 1:
            raise ConfigError(f"bad word token {tok!r}")
        letters.append((int(body), star))
    if not letters:
        raise ConfigError("empty word")
    return Word(tuple(letters))


def format_word(word):
    return " ".join(f"{i}*" if s else f"{i}" for i, s in word.letters)


def _as_word(w):
    return w if isinstance(w, Word) else parse_word(w)


class _Marginal:
    """Moment access for one letter: selfadjoint (interval measure or a
    moment sequence) or unitary (circle measure)."""

    def __init__(self, spec):
        if isinstance(spec, measures.GridMeasure):
            self.kind = "selfadjoint" if spec.carrier == "interval" else "unitary"
            self._mu = spec
            self._seq = None
        else:
            seq = np.asarray(spec, dtype=float)
            if seq.ndim != 1 or seq.size == 0 or abs(seq[0] - 1.0) > 1e-12:
                raise ConfigError(
                    "a moment-sequence marginal must be 1-d with m[0] = 1")
            self.kind = "selfadjoint"
            self._mu = None
            self._seq = seq

    def moment(self, e):
        if self.kind == "selfadjoint":
            if e < 1:
                raise ConfigError("selfadjoint letters take positive powers")
            if self._seq is not None:
                if e >= self._seq.size:
                    raise ConfigError(
                        f"marginal moment sequence too short for power {e}")
                return complex(self._seq[e])
            return complex(measures.moment(self._mu, e))
        return complex(measures.moment(self._mu, e))


class _FreeProduct:
    def __init__(self, marginals, max_degree=MAX_WORD_DEGREE):
        if not marginals:
            raise ConfigError("need at least one marginal")
        self.marginals = [m if isinstance(m, _Marginal) else _Marginal(m)
                          for m in marginals]
        self.max_degree = int(max_degree)
        self._memo = {}

    def _blocks(self, word):
        blocks = []
        for idx, star in word.letters:
            if idx > len(self.marginals):
                raise ConfigError(f"word uses letter {idx} but only "
                                  f"{len(self.marginals)} marginals are given")
            kind = self.marginals[idx - 1].kind
            if kind == "selfadjoint":
                e = 1  # stars are no-ops on selfadjoint letters
            else:
                e = -1 if star else 1
            blocks.append((idx, e))
        return self._merge(blocks)

    @staticmethod
    def _merge(blocks):
        out = []
        for idx, e in blocks:
            if out and out[-1][0] == idx:
                s = out[-1][1] + e
                if s == 0:
                    out.pop()
                else:
                    out[-1] = (idx, s)
            else:
                out.append((idx, e))
        return tuple(out)

    def _tau(self, blocks):
        if not blocks:
            return 1.0 + 0.0j
        if len(blocks) == 1:
            idx, e = blocks[0]
            return self.marginals[idx - 1].moment(e)
        hit = self._memo.get(blocks)
        if hit is not None:
            return hit
        r = len(blocks)
        means = [self.marginals[i - 1].moment(e) for i, e in blocks]
        total = 0.0 + 0.0j
        for mask in range((1 << r) - 1):  # every proper subset of the letters
            coef = 1.0 + 0.0j
            kept = []
            for j in range(r):
                if mask >> j & 1:
                    kept.append(blocks[j])
                else:
                    coef *= means[j]
            if coef == 0.0:
                continue
            sign = -1.0 if (r - len(kept)) % 2 else 1.0
            total += sign * coef * self._tau(self._merge(kept))
        value = -total
        self._memo[blocks] = value
        return value

    def moment(self, word):
        word = _as_word(word)
        if word.degree > self.max_degree:
            raise ConfigError(
                f"word degree {word.degree} exceeds the cap {self.max_degree}; "
                "pass max_degree explicitly to go higher")
        value = self._tau(self._blocks(word))
        if all(m.kind == "selfadjoint" for m in self.marginals):
            return float(value.real)
        return complex(value)


def free_product_moment(marginals, word, max_degree=MAX_WORD_DEGREE):
    """Moment of a word under the free product of the marginal laws.

    Parameters
    ----------
    marginals : sequence
        One entry per letter: an interval :class:`~freetci.measures.GridMeasure`
        (selfadjoint letter), a circle one (unitary letter), or a plain
        moment sequence ``m[0..d]`` with ``m[0] = 1``.
    word : Word or str
        E.g. ``"1 2* 1"``.
    """
    return _FreeProduct(marginals, max_degree).moment(word)


def _nc_pairings(seq, memo):
    # seq: tuple of letter indices to be pair-connected without crossings
    if not seq:
        return 1
    hit = memo.get(seq)
    if hit is not None:
        return hit
    total = 0
    first = seq[0]
    for j in range(1, len(seq), 2):
        if seq[j] == first:
            total += (_nc_pairings(seq[1:j], memo)
                      * _nc_pairings(seq[j + 1:], memo))
    memo[seq] = total
    return total


def semicircular_moment(word):
    """Moment of a word in free standard semicircular letters: the number of
    non-crossing pair partitions matching equal letters."""
    word = _as_word(word)
    if word.degree > MAX_WORD_DEGREE:
        raise ConfigError(f"word degree {word.degree} exceeds the cap "
                          f"{MAX_WORD_DEGREE}")
    seq = tuple(idx for idx, _ in word.letters)
    if len(seq) % 2:
        return 0.0
    return float(_nc_pairings(seq, {}))


def haar_free_moment(word):
    """Moment of a word in free Haar unitary letters: 1 if the word reduces
    to the identity in the free group, else 0."""
    word = _as_word(word)
    stack = []
    for idx, star in word.letters:
        e = -1 if star else 1
        if stack and stack[-1][0] == idx and stack[-1][1] == -e:
            stack.pop()
        else:
            stack.append((idx, e))
    return 1.0 if not stack else 0.0


def enumerate_words(n_letters, max_degree, starred=False):
    """All words over ``n_letters`` letters up to ``max_degree``, without
    stars (selfadjoint alphabets) or with them (unitary alphabets)."""
    if n_letters < 1 or max_degree < 1:
        raise ConfigError("need at least one letter and degree >= 1")
    symbols = [(i, False) for i in range(1, n_letters + 1)]
    if starred:
        symbols += [(i, True) for i in range(1, n_letters + 1)]
    words = []
    frontier = [()]
    for _ in range(max_degree):
        frontier = [w + (s,) for w in frontier for s in symbols]
        words.extend(Word(w) for w in frontier)
    return words


@dataclass
class MomentTable:
    """Word-indexed moments, e.g. of a free product state or a sampled
    matrix ensemble."""

    kind: str
    n_letters: int
    max_degree: int
    entries: dict = field(default_factory=dict)
    stderr: dict = field(default_factory=dict)

    def lookup(self, word):
        return self.entries[format_word(_as_word(word))]

    def to_json_dict(self):
        return {
            "kind": self.kind,
            "n_letters": self.n_letters,
            "max_degree": self.max_degree,
            "entries": {k: [v.real, v.imag] for k, v in
                        ((k, complex(v)) for k, v in sorted(self.entries.items()))},
            "stderr": {k: float(v) for k, v in sorted(self.stderr.items())},
        }

    @classmethod
    def from_json_dict(cls, data):
        try:
            entries = {k: complex(re, im) for k, (re, im) in data["entries"].items()}
            stderr = {k: float(v) for k, v in data.get("stderr", {}).items()}
            return cls(kind=data["kind"], n_letters=int(data["n_letters"]),
                       max_degree=int(data["max_degree"]), entries=entries,
                       stderr=stderr)
        except (KeyError, TypeError, ValueError) as exc:
            raise ConfigError(f"malformed moment table: {exc}") from exc

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_json_dict(), fh, sort_keys=True, indent=1)
            fh.write("\n")

    @classmethod
    def load(cls, path):
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return cls.from_json_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load moment table: {exc}") from exc


def free_product_table(marginals, max_degree=None):
    """Moment table of the free product across all words up to the degree
    cap (8 for selfadjoint alphabets, 4 for unitary ones by default)."""
    state = _FreeProduct(marginals,
                         max_degree or MAX_WORD_DEGREE)
    unitary = any(m.kind == "unitary" for m in state.marginals)
    if max_degree is None:
        max_degree = 4 if unitary else MAX_WORD_DEGREE
        state.max_degree = max_degree
    words = enumerate_words(len(state.marginals), max_degree, starred=unitary)
    entries = {format_word(w): state.moment(w) for w in words}
    return MomentTable(kind="unitary" if unitary else "selfadjoint",
                       n_letters=len(state.marginals), max_degree=max_degree,
                       entries=entries)
