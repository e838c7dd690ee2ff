"""Adult death rates estimated from survey reports about respondents'
personal networks, with a sibling-history comparator, survey-bootstrap
variance, bias decomposition, and a synthetic-world validator."""

__version__ = "0.1.0"

from .bootstrap import (
    EstimateWithCI,
    ReplicateWeights,
    SurveyDesign,
    bootstrap_estimate,
    make_replicates,
)
from .config import AnalysisConfig, PreparedSurvey, prepare_survey
from .diagnostics import (
    HoldoutCheck,
    InterviewYield,
    LeaveOneOutDegrees,
    deaths_per_interview,
    internal_consistency_holdout,
    loo_degree,
)
from .errors import (
    ConfigError,
    DegenerateVisibilityError,
    DesignError,
    EmptyCellError,
    NetworkSurvivalError,
    ScheduleError,
    SchemaError,
    ValidationError,
)
from .estimators import (
    DeathRateEstimate,
    DegreeEstimate,
    RateEstimator,
    RateTable,
    estimate_deaths,
    estimate_exposure,
    ht_death_reports,
    kp_average_degree,
    network_survival_rate,
    network_survival_rate_general,
)
from .groups import FEMALE, MALE, GroupId, GroupScheme, assign_group, parse_group_label
from .lifetable import (
    RateSchedule,
    death_probability,
    rate_to_probability,
    schedule_for_sex,
)
from .sensitivity import (
    AdjustmentFactors,
    GridCell,
    adjustment_from_truth,
    apply_sensitivity,
    imperfect_sampling_index,
    sensitivity_grid,
)
from .sibling import (
    SiblingContribution,
    SiblingRateEstimator,
    SiblingRateTable,
    SiblingRecord,
    expand_sibling_histories,
    load_siblings,
    sibling_survival_rate,
)
from .simulate import (
    CensusDesign,
    ClusterDesign,
    SimConfig,
    SRSDesign,
    SyntheticWorld,
    TruthRecord,
    design_from_dict,
    draw_sample,
    generate_world,
    true_quantities,
    verify_reporting_identity,
)
from .surveydata import (
    DeathReport,
    FrameTotals,
    KnownPopulationTable,
    LoadResult,
    RespondentRecord,
    denormalize_weights,
    filter_tie_definition,
    frame_totals_from_weights,
    load_known_populations,
    load_respondents,
    topcode_kp_reports,
    truncate_frame,
)
