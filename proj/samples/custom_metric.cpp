// Reads a manifold file and prints curvature, holonomy and Killing data at its base point.

#include <fstream>
#include <iostream>
#include <sstream>

#include "kvf/kvf.hpp"

int main(int argc, char** argv) {
    if (argc != 2) {
        std::cerr << "usage: " << argv[0] << " FILE.man\n";
        return 2;
    }
    std::ifstream in(argv[1]);
    std::stringstream ss;
    ss << in.rdbuf();
    try {
        const kvf::ManifoldSpec spec = kvf::parse_manifold(ss.str());
        const kvf::CurvatureData curv = kvf::compute_curvature(spec, spec.base_point, 1);
        std::cout << spec.name << ": n = " << spec.dimension() << ", max |R| = " << curv.riemann().max_abs()
                  << ", max |nabla R| = " << curv.cov_riemann(1).max_abs() << "\n";
        const kvf::HypothesisReport h = kvf::hypothesis_check(spec);
        std::cout << "holonomy dimension " << h.holonomy.dimension << ", verdict " << kvf::verdict_name(h.verdict)
                  << "\n";
        const kvf::KernelReport k = kvf::killing_dimension(spec, spec.base_point);
        std::cout << "Killing kernel dimension " << k.stabilized_dim << (k.stabilized ? "" : " (unstable)") << "\n";
        for (const auto& w : k.warnings) std::cout << "warning: " << w << "\n";
    } catch (const kvf::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
