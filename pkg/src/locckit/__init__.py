"""locckit: exact and approximate LOCC-transformation machinery for small
multipartite systems, with the five-qubit tilted family built in.
"""

__version__ = "0.1.0"

from .states import (QuantumState, DensityMatrix, LocalOperatorBundle,
                     make_named_state, ghz_state, dicke_state,
                     generic_seed_state, tilted_ghz_state, product_zero_state,
                     product_state, apply_local, reduced_density, fidelity,
                     trace_distance, spectrum, pure_deficit)
from .bipartite import (SchmidtVector, BipartiteEnsembleSpec, schmidt_vector,
                        majorizes, nielsen_convertible, vidal_monotone,
                        pmax_bipartite, ensemble_feasible,
                        optimal_faithful_fidelity, two_unitary_fidelity_max)
from .slocc import (SloccClassState, SymmetrySet, AnnihilatorSet,
                    LocalMeasurement, pmax_generic, monotone_Ex,
                    sep_deterministic_residual, sep_ensemble_residual,
                    sep1_feasibility_solve, chi_perturb)
from .optimize import (OptimizerConfig, SalvageResult, lu_fidelity_lower,
                       lu_fidelity_bounds, nearest_symmetric_product,
                       optimize_salvage_branch)
from .protocols import (BranchNode, BranchTree, ProtocolLeaf, ProtocolReport,
                        run_osbp, osbp_report, run_sequential_protocol,
                        verify_ensemble_monotones, lemma3_witness)
from .bounds import (BoundPair, f_triv_bounds, bisep_max_fidelity,
                     epsilon_threshold, approx_distance_bounds)
from . import seedfamily
