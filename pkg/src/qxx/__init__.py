"""QXX: quantum-circuit layout via gaussian-cost placement search.

The pipeline: place a circuit's qubits onto device registers with a pruned
tree search (placement), make every gate executable by inserting SWAPs
(router), and judge the result by the depth ratio against the input. Around
it: benchmark generation with known optima, parameter search (exhaustive,
random, weighted random), and a learned surrogate for the layout quality.
"""

from .circuit import Circuit, CircuitFormatError, Gate, GateKind, depth, emit_circuit, interaction_graph, parse_circuit
from .device import Device, DeviceFormatError, aspen16, build_device, grid, line, parse_device, emit_device
from .placement import (
    PARAM_NAMES,
    PartialMapping,
    PlacementResult,
    PlacementTimeout,
    QxxParams,
    gdepth,
    place,
    update_offsets,
)
from .router import RoutedCircuit, RoutingViolation, ratio, route, verify
from .benchgen import BenchCase, generate, load_suite, write_suite
from .optimizer import (
    ImportanceWeights,
    ParamSpace,
    SearchResult,
    TrialRecord,
    evaluate,
    exhaustive,
    full_space,
    importance,
    probabilities_from_weights,
    random_search,
    reduced_space,
    wrs,
)
from .surrogate import (
    FEATURE_NAMES,
    KnnModel,
    MlpModel,
    Scaler,
    SurrogateModel,
    cross_validate,
    features,
    fit_surrogate,
    load_model,
    make_objective,
    predict_knn,
    predict_mlp,
    save_model,
    train_knn,
    train_mlp,
)

__version__ = "0.1.0"
