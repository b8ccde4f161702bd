"""Few-measurement 2D localization in a known polygonal map, robust to
unknown dynamic obstacles via k'-of-k consensus over conservative voxelized
measurement preimages, plus a simulation and experiment harness.
"""

from .geometry import (
    EPS_GEOM,
    INSIDE,
    ON_BOUNDARY,
    OUTSIDE,
    Point2,
    Polygon,
    Pose,
    RigidMotion,
    Violation,
    aabb,
    compose,
    contains,
    ray_cast,
    rotation_motion,
    validate,
    wrap_angle,
)
from .voxelgrid import (
    Component,
    CountGrid,
    GridSpec,
    VoxelMask,
    accumulate,
    connected_components,
    locate,
    make_spec,
    voxel_center,
)
from .preimage import (
    MeasurementSpec,
    PreimageParams,
    agreement_residual,
    compute_preimage,
    near_visibility_event,
    slice_slack,
)
from .fusion import (
    CandidatePose,
    FusionParams,
    LocalizationResult,
    baseline_localize,
    consensus_mask,
    extract_candidates,
    localize,
)
from .simworld import (
    Obstacle,
    Scene,
    TrialSetup,
    make_trial,
    measure_dynamic,
    random_obstacles,
    random_polygon,
    sample_free_pose,
    static_trajectory,
)
from .scenes import (
    BUILTIN_SCENES,
    SceneFormatError,
    builtin_scene,
    load_scene,
    save_scene,
)
from .harness import ExperimentConfig, TrialRecord, run_experiment, run_trial
from .render import render_svg

__version__ = "0.1.0"
