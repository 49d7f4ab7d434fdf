"""Interior eigenvalues of sparse Hermitian matrices via a localized
spectrum-slicing basis built element by element."""

__version__ = "0.1.0"

from .core import (DistanceMap, SparseHermitian, UNREACHABLE, extract_submatrix,
                   geodesic_distances, index_set, spectral_interval, spmm)
from .models import (ModelSpec1D, ModelSpec2D, generate_1d, generate_2d,
                     periodic_distance)
from .mmio import MatrixMarketError, read_matrix_market, write_matrix_market
from .partition import (Partition, effective_agreement_distance,
                        extended_elements_mhop, load_partition_map,
                        partition_from_map, partition_general, partition_mhop,
                        partition_structured_1d, partition_structured_2d,
                        save_partition_map)
from .bounds import (DecayModel, SpectrumScaling, chebyshev_error_bound,
                     decay_envelope, optimize_alpha, total_maxnorm_bound,
                     truncation_bound)
from .basis import (ElementBasis, LssBasis, SliceParams, assemble_approx_operator,
                    build_element_basis, build_lss_basis, gaussian_filter,
                    load_lss_basis, local_partial_eig, local_svd_truncate,
                    save_lss_basis)
from .projection import (ProjectedPencil, SliceResult, assemble_pencil,
                         filter_spurious, reconstruct_eigenvectors,
                         residual_norms_global, residual_norms_local,
                         select_window, solve_pencil)
from .pipeline import run_slice, theoretical_error_bound
from .oracle import (DenseEig, dense_eig, eigs_in_window, exact_lss_operator,
                     match_eigenvalues, max_norm_error)
