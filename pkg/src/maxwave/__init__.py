"""maxwave: grid-scale numerics for Schrodinger maximal functions.

The package provides the machinery needed to probe pointwise-convergence
questions for the free evolution at a single dyadic scale R: band-limited
fields and their exact propagation (`gridfield`), compactly supported
window profiles (`windows`), a tight wave-packet frame with tube and
spectral localisation certificates (`packets`), directionally broad norms
and their cell calculus (`broad`), polynomial cell decompositions and
tangency geometry (`polys`, `varieties`), and reproducible experiment
drivers with delimited and plotted output (`experiments`, `report`, `cli`).
"""

from maxwave.broad import (
    BroadParams,
    Cap,
    CapFamily,
    bl_norm,
    bl_norm_inf,
    bl_report,
    broad_data,
    broad_vs_full_decomposition,
    cap_in_subspace,
    caps,
    check_a_split,
    check_holder,
    check_subadditivity,
    decomposition_certificate,
    direction,
    make_ball_random,
    mu_cell,
)
from maxwave.gridfield import (
    GridField,
    NormRelation,
    ball_mask,
    focusing_field,
    make_band_limited_random,
    maximal_field,
    parabolic_rescale,
    propagate,
    propagate_oracle,
    region_lp_norm,
    time_grid,
)
from maxwave.packets import (
    PacketParams,
    PacketSet,
    Tube,
    decompose,
    evolve_packet,
    load_packets,
    localization_report,
    packet_spectral_support,
    reconstruct,
    save_packets,
    select_packets,
    tubes_meeting_ball,
)
from maxwave.polys import (
    MassFunction,
    MultiPoly,
    SignCellPartition,
    bisecting_poly,
    cells_crossed_by_line,
    level_degrees,
    partition,
    poly_space_dim,
    random_poly,
    side_masses,
)
from maxwave.varieties import (
    TangencyParams,
    Variety,
    classify_tube,
    neighborhood_member,
    perturb_to_tci,
    tangent_space,
    tci_certificate,
    translate_cover,
    transverse_ball_cover,
    variety_distance,
    variety_distance_lattice,
)
from maxwave.experiments import (
    ExperimentConfig,
    ScanResult,
    band_block,
    config_hash,
    exponent_scan,
    part_a_check,
    reduction_demo,
    scan_target_exponent,
    survey_max_ratio,
    worker_count,
)
from maxwave.report import emit_report, load_schema, summary_dict
from maxwave.selfcheck import geometry_check, packets_check, partition_check

__version__ = "0.1.0"
