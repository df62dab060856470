"""Layer-2 rollup library: sequencer, Poseidon Merkle batching, batch
proofs, content-addressed payload storage, a simulated permissioned ledger,
and a load-benchmark harness."""

from .field import P
from .poseidon import PoseidonParams, default_params, load_params, poseidon2
from .merkle import MerklePath, MerkleTree32, build_tree, prove_membership, root, verify_membership
from .transactions import (
    BATCH_SIZE,
    BatchDraft,
    Transaction,
    canonical_bytes,
    dummy_leaf,
    leaf_encode,
    pad_batch,
    random_transaction,
)
from .cid import Cid, cid_of, is_cid_text, parse_cid
from .store import (
    BatchPayload,
    BatchStore,
    InMemoryObjectStore,
    IpfsHttpStore,
    LocalObjectStore,
)
from .proofs import (
    CircuitShape,
    ProvingKeyMaterial,
    RollupProof,
    RollupStatement,
    circuit_shape,
    prove,
    setup,
    verify,
)
from .ledger import BatchCommitment, LatencyModel, SimulatedLedger, replay_block_log
from .clocks import SimulatedClock, WallClock
from .pool import TransactionPool, build_pool
from .sequencer import Sequencer
from .config import Config, build_stack, config_from_dict, load_config
from .bench import BenchReport, WorkloadSpec, compare, reconcile, run_workload
from .simulation import run_deterministic_session

__version__ = "0.1.0"
