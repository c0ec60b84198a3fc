"""Three-pile card-sorting teaching game with a teacher-modeling learner."""

from .beliefs import (
    Distribution,
    DivergentSupport,
    SoftmaxParams,
    ZeroEvidence,
    bayes_update,
    entropy,
    expected_info_gain,
    kl_divergence,
    point_mass,
    softmax_policy,
    uniform,
)
from .cards import (
    Card,
    CardPlay,
    Color,
    Count,
    Dimension,
    Pile,
    Rule,
    Shape,
    consistent_rules,
    deck,
    enumerate_rules,
    sort_card,
)
from .harness import (
    EpisodeConfig,
    EpisodeResult,
    TerminationPolicy,
    UnmatchedSeeds,
    compare_modes,
    recovery_curve,
    replay_trace,
    run_batch,
    run_episode,
)
from .learner import (
    JointBelief,
    LearnerConfig,
    LearnerMode,
    confidence,
    diagnostics,
    has_converged,
    hypothesis_marginal,
    init_learner,
    map_rule,
    map_teacher_hypothesis,
    observe_card,
    record_utterance,
    rule_marginal,
    select_ce,
    select_feedback,
)
from .teacher import (
    CE,
    Assertion,
    InconsistentPlay,
    TeacherHypothesis,
    TeacherKind,
    TeacherState,
    Utterance,
    believes_learner_knows,
    card_policy,
    default_grid,
    init_teacher,
    interpret_feedback,
    make_utterance,
    observe_own_play,
)

__all__ = [name for name in dir() if not name.startswith("_")]
