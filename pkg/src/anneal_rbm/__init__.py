"""Replication-based mitigation workbench for Ising annealing.

End-to-end pipeline: hardware-graph modeling (Pegasus/Chimera), replica and
K_{1,3} penalty-code embeddings, planted-solution instance generation via
frustrated loops on an Eulerian edge cover, sampling through a noise-
injecting simulated annealer or an external-sampler file bridge, decoding,
and energy / ground-state-probability reporting.
"""

__version__ = "0.1.0"

from .decode import (DecodedSolution, QacProblem, build_qac_problem,
                     decode_majority, decode_rbm, decode_sqa_repeat)
from .embedding import (CombinedEmbedding, QacEncoding, QacUnit,
                        ReplicaPartition, combine_qac_rbm, logical_graph,
                        partition_replicas, tile_qac, verify_partition)
from .errors import (ContractError, DimensionMismatchError,
                     EmbeddingInfeasibleError, FormatError,
                     InvalidParameterError)
from .experiments import (ExperimentConfig, ExperimentReport, emit_report,
                          gsp, run_qac_comparison, run_scaling)
from .ising import (IsingProblem, ReplicatedProblem, energies, energy,
                    gauge_transform, make_problem, replicate)
from .planted import (GeneratorParams, LoopCover, PlantedInstance,
                      build_loop_cover, decompose_loops, eulerian_augment,
                      generate_instance, verify_planted)
from .samplers import (AnnealParams, ExactSolution, NoiseModel, SampleSet,
                       export_problem, export_samples, import_samples,
                       region_biases, sample_sa, solve_exact)
from .topology import (GraphStats, HardwareGraph, apply_defects,
                       build_chimera, build_custom, build_pegasus,
                       graph_stats, read_graph, write_graph)
