"""Local hidden-variable model of the Franson two-photon interferometer."""

from .model import (
    LEFT_CHART,
    RIGHT_CHART,
    HiddenVariablePair,
    Label,
    LeftChart,
    RightChart,
    Settings,
    Timing,
    classify_left,
    classify_right,
    corrupted_left_chart,
    lobe_height,
    r_sections,
    reduce_angle,
    respond_pair,
    shift_left,
    shift_right,
)
from .quantum import (
    all_events_correlation,
    chsh,
    coincidence_prob,
    coincident_component_norm,
    make_state,
    noncoincidence_prob,
    postselected_correlation,
    quantum_joint_table,
    singles_prob,
)
from .simulator import (
    SimConfig,
    coincidence_sort,
    efficiency_diagnostic,
    generate_stream,
    remove_right_analyzer,
    run_chsh,
)
from .verifier import QuadratureError, joint_prob_numeric, mc_joint_table, verify_charts

__version__ = "0.1.0"
