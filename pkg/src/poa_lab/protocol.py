"""Deterministic rules of the age-of-work mining protocol.

Targets, hash classification, age-ring chaining, age-of-work (AoW)
accounting, the two-level difficulty mapping, and block/ring verification.
Everything here is a pure function of its inputs; mining loops that sweep
nonces may be parallelised by nonce range.

Hashing is SHA-256 over a length-prefixed canonical concatenation, so
all hash values live in [0, 2^256). A miner's block target depends on its
current AoW; the age-ring target is a global constant.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Optional, Sequence

HASH_BITS = 256

#: Distinguished empty proof value: zero length, distinct from a 0x00 byte.
NULL = b""


class EncodingError(ValueError):
    """Raised when a field cannot be serialised canonically."""


class Outcome(Enum):
    BLOCK = "block"
    EFFECTIVE_RING = "effective_ring"
    MISS = "miss"


def target_from_difficulty(d: int, l: int = HASH_BITS) -> int:
    """Target value 2^(l-d) for difficulty exponent d, exact integer."""
    if not (0 <= d <= l):
        raise ValueError(f"difficulty exponent must be in [0, {l}], got {d}")
    return 1 << (l - d)


@dataclass(frozen=True)
class Difficulty:
    """A difficulty exponent (leading zero bits demanded) over l-bit hashes."""

    level: int
    hash_width: int = HASH_BITS

    def __post_init__(self):
        if not (0 <= self.level <= self.hash_width):
            raise ValueError(f"level must be in [0, {self.hash_width}]")

    @property
    def target(self) -> int:
        return target_from_difficulty(self.level, self.hash_width)


@dataclass(frozen=True)
class PoaTargets:
    """Protocol difficulty configuration.

    d1 is the high block difficulty (AoW below the threshold), d2 the
    reduced one, d_s the age-ring difficulty. The block target therefore
    depends on a miner's AoW; the ring target is fixed.
    """

    d1: int
    d2: int
    d_s: int
    delta: int
    hash_width: int = HASH_BITS

    def __post_init__(self):
        if self.d1 <= self.d2:
            raise ValueError("d1 must exceed d2")
        if self.d2 <= self.d_s:
            raise ValueError("d2 must exceed d_s (block target below ring target)")
        if self.d_s < 0 or self.d1 > self.hash_width:
            raise ValueError("difficulty exponents out of range")
        if self.delta < 1:
            raise ValueError("delta must be >= 1")

    @property
    def t_a(self) -> int:
        """Age-ring target, global constant."""
        return target_from_difficulty(self.d_s, self.hash_width)

    def t_m(self, aow: int) -> int:
        """Block target for a miner with the given AoW."""
        return target_from_difficulty(difficulty_for_aow(aow, self), self.hash_width)


def difficulty_for_aow(aow: int, targets: PoaTargets) -> int:
    """Two-level difficulty mapping: d1 below the AoW threshold, d2 at or above."""
    if aow < 0:
        raise ValueError("aow must be nonnegative")
    return targets.d1 if aow < targets.delta else targets.d2


def classify_hash(h: int, targets: PoaTargets, aow: int = 0) -> Outcome:
    """Classify a hash value into one of the three mining outcomes.

    Half-open bands: [0, t_m) block, [t_m, t_a) effective ring,
    [t_a, 2^L) miss. The three bands partition the full hash range.
    """
    if not (0 <= h < (1 << targets.hash_width)):
        raise ValueError("hash out of range")
    if h < targets.t_m(aow):
        return Outcome.BLOCK
    if h < targets.t_a:
        return Outcome.EFFECTIVE_RING
    return Outcome.MISS


# --- Age rings ---------------------------------------------------------------


@dataclass(frozen=True)
class AgeRing:
    """Per-height chained record of a miner's effort.

    ``prev_ring_digest`` is absent (None) exactly for the first ring after
    the miner's own block. ``proof`` is the nonce that fell into the ring
    band, or NULL (empty) while the ring is ineffective. ``payload_digest``
    is the candidate-block payload in force when the ring was mined; it is
    carried so a verifier can recompute the ring-band hash later.
    """

    prev_ring_digest: Optional[bytes]
    prev_block_digest: bytes
    proof: bytes = NULL
    payload_digest: bytes = b""

    @property
    def effective(self) -> bool:
        return self.proof != NULL


def _lp(b: bytes) -> bytes:
    """4-byte big-endian length prefix followed by the bytes."""
    if not isinstance(b, (bytes, bytearray)):
        raise EncodingError(f"expected bytes, got {type(b).__name__}")
    return len(b).to_bytes(4, "big") + bytes(b)


def serialize_ring(ring: AgeRing) -> bytes:
    """Canonical, bit-exact ring encoding (each field length-prefixed)."""
    return (
        _lp(ring.prev_ring_digest if ring.prev_ring_digest is not None else b"")
        + _lp(ring.prev_block_digest)
        + _lp(ring.proof)
    )


def ring_digest(ring: AgeRing) -> bytes:
    return hashlib.sha256(serialize_ring(ring)).digest()


def build_age_ring(
    prev_ring: Optional[AgeRing],
    prev_block_digest: bytes,
    proof: bytes = NULL,
    payload_digest: bytes = b"",
) -> AgeRing:
    """Chain a new ring onto ``prev_ring`` (absent for the first ring)."""
    prev = ring_digest(prev_ring) if prev_ring is not None else None
    return AgeRing(prev, prev_block_digest, proof, payload_digest)


def update_aow(aow: int, ring: AgeRing) -> int:
    """AoW update for one height: +1 for an effective ring, unchanged otherwise.

    The reset to zero on the miner's own block is a separate transition
    owned by the caller.
    """
    if aow < 0:
        raise ValueError("aow must be nonnegative")
    return aow + 1 if ring.effective else aow


def compute_poa_hash(
    prev_block_digest: bytes,
    nonce: bytes,
    payload_digest: bytes,
    ring: AgeRing,
    address: bytes,
) -> int:
    """Mining hash over the canonical concatenation, as a 256-bit integer."""
    data = (
        _lp(prev_block_digest)
        + _lp(nonce)
        + _lp(payload_digest)
        + _lp(serialize_ring(ring))
        + _lp(address)
    )
    return int.from_bytes(hashlib.sha256(data).digest(), "big")


def fold_ring_chain(rings: Sequence[AgeRing]) -> bytes:
    """Digest of the head after re-deriving every chain link from the fields.

    Mutating any field of any ring in the sequence changes the result.
    """
    if not rings:
        raise ValueError("empty ring chain")
    digest = None
    for ring in rings:
        linked = AgeRing(digest, ring.prev_block_digest, ring.proof, ring.payload_digest)
        digest = ring_digest(linked)
    return digest


# --- Miner state and blocks ---------------------------------------------------


@dataclass
class MinerState:
    """Mutable per-miner mining state.

    ``aow`` always equals the count of effective rings in ``ring_chain``;
    ``ring_done`` guards the one-ring-per-height rule.
    """

    address: bytes
    power: float = 1.0
    aow: int = 0
    ring_done: bool = False
    ring_chain: list = field(default_factory=list)

    def advance_height(self):
        """Someone else's block ended the height; a new ring may be mined."""
        self.ring_done = False

    def reset_after_win(self):
        """Own block accepted: AoW returns to zero, the ring chain restarts."""
        self.aow = 0
        self.ring_done = False
        self.ring_chain = []


@dataclass(frozen=True)
class BlockRecord:
    height: int
    prev_digest: bytes
    payload_digest: bytes
    nonce: bytes
    ring: AgeRing
    miner_address: bytes
    claimed_aow: int


@dataclass(frozen=True)
class HeightResult:
    """Outcome of mining one height with a bounded nonce budget."""

    block: Optional[BlockRecord]
    ring: AgeRing
    trials: int
    ring_effective: bool


def mine_height(
    state: MinerState,
    prev_block_digest: bytes,
    payload_digest: bytes,
    targets: PoaTargets,
    max_trials: int,
    height: int = 0,
    nonce_start: int = 0,
) -> HeightResult:
    """Honest mining at one height: sweep nonces until a block or the budget.

    The current ring starts with a NULL proof; the first nonce landing in
    the ring band becomes the proof (at most once per height), after which
    mining continues with the updated ring and possibly reduced difficulty.
    Appends the finalised ring to ``state.ring_chain`` and updates
    ``state.aow``; on a win the caller should accept the block and call
    ``state.reset_after_win()``.
    """
    prev_ring = state.ring_chain[-1] if state.ring_chain else None
    ring = build_age_ring(prev_ring, prev_block_digest, NULL, payload_digest)
    t_a = targets.t_a
    t_m = targets.t_m(state.aow)
    ring_effective = False
    trials = 0
    for nonce_int in range(nonce_start, nonce_start + max_trials):
        nonce = nonce_int.to_bytes(8, "big")
        h = compute_poa_hash(prev_block_digest, nonce, payload_digest, ring, state.address)
        trials += 1
        if h < t_m:
            state.ring_chain.append(ring)
            block = BlockRecord(
                height, prev_block_digest, payload_digest, nonce, ring,
                state.address, state.aow,
            )
            return HeightResult(block, ring, trials, ring_effective)
        if h < t_a and not state.ring_done:
            ring = replace(ring, proof=nonce)
            state.ring_done = True
            state.aow += 1
            ring_effective = True
            t_m = targets.t_m(state.aow)
    state.ring_chain.append(ring)
    return HeightResult(None, ring, trials, ring_effective)


# --- Verification -------------------------------------------------------------


@dataclass(frozen=True)
class VerifyResult:
    accepted: bool
    reason: Optional[str] = None

    def __bool__(self):
        return self.accepted


REJECT_BAD_NONCE = "bad-nonce"
REJECT_BROKEN_RING_CHAIN = "broken-ring-chain"
REJECT_BAD_RING_PROOF = "bad-ring-proof"
REJECT_AOW_MISMATCH = "aow-mismatch"


def verify_block(
    block: BlockRecord,
    prev_blocks: Sequence[bytes],
    prior_rings: Sequence[AgeRing],
    targets: PoaTargets,
) -> VerifyResult:
    """Validate a block against the ring chain since the miner's last win.

    ``prev_blocks[j]`` is the digest of the block preceding ring j's height,
    so the last entry is the digest the new block builds on. Checks, in
    order: the ring chain links and per-ring proofs (replaying the AoW the
    miner would have held at each height), the claimed AoW against the
    effective-ring count, and the block hash against the target implied by
    the claimed AoW.
    """
    if len(prev_blocks) != len(prior_rings) or not prior_rings:
        return VerifyResult(False, REJECT_BROKEN_RING_CHAIN)
    if block.ring != prior_rings[-1]:
        return VerifyResult(False, REJECT_BROKEN_RING_CHAIN)
    if block.prev_digest != prev_blocks[-1]:
        return VerifyResult(False, REJECT_BROKEN_RING_CHAIN)

    aow = 0
    expected_prev = None
    for ring, prev_digest in zip(prior_rings, prev_blocks):
        if ring.prev_ring_digest != expected_prev:
            return VerifyResult(False, REJECT_BROKEN_RING_CHAIN)
        if ring.prev_block_digest != prev_digest:
            return VerifyResult(False, REJECT_BROKEN_RING_CHAIN)
        if ring.effective:
            unproved = replace(ring, proof=NULL)
            h = compute_poa_hash(
                prev_digest, ring.proof, ring.payload_digest, unproved,
                block.miner_address,
            )
            if not (targets.t_m(aow) <= h < targets.t_a):
                return VerifyResult(False, REJECT_BAD_RING_PROOF)
            aow += 1
        expected_prev = ring_digest(ring)

    if block.claimed_aow != aow:
        return VerifyResult(False, REJECT_AOW_MISMATCH)

    h = compute_poa_hash(
        block.prev_digest, block.nonce, block.payload_digest, block.ring,
        block.miner_address,
    )
    if h >= targets.t_m(block.claimed_aow):
        return VerifyResult(False, REJECT_BAD_NONCE)
    return VerifyResult(True)
