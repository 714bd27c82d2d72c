"""structscan: scan-statistic and mixture-model estimators for structured anomalies."""

from .families import (
    EnumerationCapExceeded,
    FamilySpec,
    Graph,
    IndexSet,
    connected_family,
    contains,
    count_supersets,
    edge_dense_family,
    enumerate_family,
    epsilon_ball_family,
    generate_graph,
    graph_cut_family,
    interval_family,
    read_graph,
    submatrix_family,
    unstructured_family,
    write_graph,
)
from .sampling import (
    AnomalySampler,
    NoMemberOfSizeError,
    Observations,
    rng_from,
    sample_anomaly,
    sample_asd,
    sample_gmm,
    sample_poisson_counts,
)
from .scan import (
    Budget,
    RegularizedScanResult,
    ScanResult,
    argmax_additive,
    gamma,
    glr_statistic,
    mle,
    poisson_scan_mle,
    poisson_score,
    regularized_submatrix_mle,
)
from .mixture import (
    BandEmptyError,
    EMConfig,
    MixtureFit,
    fit_gmm_em,
    fit_poisson_mixture_em,
    gmm_estimator,
    gmm_estimator_shifted,
    responsibilities,
    save_mixture_fit,
)
from .experiments import (
    AsymptoticBias,
    BiasConfig,
    CellAggregate,
    ExperimentReport,
    MuDetectResult,
    TrialRow,
    WassersteinScaling,
    asymptotic_unstructured_bias,
    bias_experiment,
    estimate_mu_detect,
    set_metrics,
    wasserstein_1d,
    wasserstein_scaling,
)
from .ilp import export_ilp

__version__ = "0.1.0"
