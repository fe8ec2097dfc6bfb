// Simulate one block-structured dataset, cluster its variables, score the result.
#include "bngc/bngc.hpp"

#include <iostream>

int main() {
  bngc::SimDesign design;
  design.n = 200;
  design.p = 40;
  design.K = 4;
  const bngc::Clustering truth = bngc::design_partition(design, 0);
  const bngc::SimulatedDataset sim = bngc::design_dataset(design, truth, 0, 0);

  bngc::GraphClusteringConfig cfg;
  cfg.spike_slab.seed = 7;
  const auto r = bngc::cluster_variables(sim.data, cfg);

  std::cout << "embedding dimension " << r.embedding.dim << ", clusters found " << r.clustering.k << "\n";
  std::cout << "NMI vs truth " << bngc::nmi(truth, r.clustering) << "\n";
  std::cout << "first eigenvalues:";
  for (int i = 0; i < 6; ++i) std::cout << " " << r.spectrum.eigenvalues(i);
  std::cout << "\n";
}
