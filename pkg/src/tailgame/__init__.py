"""Repeated zero-sum games where one player knows the state.

The library covers the constructive side of the theory at desk scale:
posterior belief martingales, block decompositions of a play, the
block-based best response of the uninformed player, splitting strategies
for the informed player, matrix game values, concave envelopes of the
non-revealing value, and the canned experiments around the alternating
examples where the maxmin and minmax values differ.
"""

from .beliefs import (
    BlockEvent,
    BlockTracker,
    PosteriorState,
    block_step,
    default_delta,
    martingale_residual,
    near_boundary,
    posterior,
    restrict_belief,
    support_above,
)
from .model import (
    Belief,
    EMPTY_HISTORY,
    GameSpec,
    LassoPlay,
    PublicHistory,
    Timing,
    concat,
    history_from_labels,
    load_spec_json,
    unroll,
    validate_spec,
)
from .payoffs import (
    BuchiObjective,
    CoBuchiObjective,
    CustomPayoff,
    Example1Payoff,
    Example2Payoff,
    LimsupAverage,
    NotLassoEvaluable,
    ParityObjective,
    PayoffEvaluator,
    average_game,
    check_shift_invariant,
    check_tail_measurable,
    evaluator_from_json,
    example1_game,
    example2_game,
    periodic_track,
)
from .simulate import (
    SimConfig,
    SimResult,
    estimate_payoff,
    evaluate_exact,
    iter_episodes,
    panel_bound,
    run_episode,
    stream_seed,
)
from .solvers import (
    MatrixSolution,
    concavify,
    lipschitz_ratio,
    matrix_value,
    nr_value_average,
    nr_value_samples,
    scalar_grid,
    simplex_grid,
    u_example1,
    u_example1_samples,
)
from .strategies import (
    BlockResponseStrategy,
    ExploitStrategy,
    FunctionInformed,
    FunctionUninformed,
    Machine,
    MachineInformed,
    MachineUninformed,
    MoveScriptUninformed,
    NrOracle,
    SplitInfeasibleError,
    SplitPlan,
    SplittingStrategy,
    StationaryInformed,
    StationaryUninformed,
    average_nr_informed,
    average_oracle,
    det_action,
    example1_nr_informed,
    example1_oracle,
    example1_tau_panel,
    example2_oracle,
    make_block_response,
    make_example1_exploit,
    make_example2_exploit,
    make_splitting,
    nonrevealing_uniform,
    optimal_split_for_cav,
    point_dist,
    pure_informed,
    pure_uninformed,
    random_machine_uninformed,
    revealing_informed,
    sample_action,
    split_residual,
    stationary_informed,
    stationary_uninformed,
    strategy_from_json,
    uniform_over,
)

__version__ = "0.1.0"
