"""reeb-holo: numerics for traversing Reeb flows on contact manifolds with boundary."""

from .domains import BoundaryChart, Domain, lie_tower, vertical_chords
from .errors import (
    AmbiguousTangency,
    ContactViolated,
    EmptyDomain,
    IncompatibleBoundaryMap,
    MissingChart,
    NonLagrangianShadow,
    OpenCurveWarning,
    OutOfChordRange,
    ReebHoloError,
    ResolutionTooLow,
    SceneValidationError,
    SingularForm,
    SingularSymplectic,
    StepFailure,
)
from .forms import ContactForm, reeb_field, top_form_value
from .scene import (ContactScene, NumericsConfig, contact_check, load_scene,
                    scene_from_dict, validate_point)
from .quadrature import QuadratureSpec, integrate_form_on_chart
from .flow import (CausalityPair, HitEvent, Trajectory, causality_map,
                   integrate, next_boundary_hit, property_a_check,
                   trajectory_from_entry, waterfall_sample)
from .strata import (StratumChart, StratumPoint, classify,
                     stratum_positivity_scan, trace_stratum_curve)
from .invariants import (InvariantReport, average_length, deformation_scan,
                         invariant_report, isoperimetric_check, kappa,
                         kappa_plus, reeb_diameter, shadow_volume, volume_X)
from .contact_fields import (ContactField, MoserVelocity, moser_velocity,
                             solve_w, verify_solution)
from .holography import (BoundaryData, BoundaryDiffeo, extend_diffeo,
                         extract_boundary_data, lyapunov_bullet,
                         reconstruct_point, rotation_z)
from .legendrian import (LegendrianPatch, ShadowPatch, concavity_criterion,
                         lift_shadow, lift_shadow_surface, shadow_beta_integral,
                         shadow_project, zero_volume_checks)
from .nonsqueezing import (AffineEmbedding, EmbeddingReport, complexity,
                           inclusion, nonsqueezing_check, shadow_kappa,
                           z_translation)

__version__ = "0.1.0"
