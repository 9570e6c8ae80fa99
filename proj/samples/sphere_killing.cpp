// Killing algebra of the round sphere: kernel dimension and the three rotations.

#include <iostream>

#include "kvf/kvf.hpp"

int main() {
    const kvf::ManifoldSpec sphere = kvf::builtin("sphere2");
    const kvf::KernelReport rep = kvf::killing_dimension(sphere, sphere.base_point);
    std::cout << "dim kill(S^2) = " << rep.stabilized_dim << " (stabilized at order " << rep.stabilization_order
              << ")\n";

    const kvf::CatalogEntry entry = kvf::catalog_entry("sphere2", {});
    const std::vector<std::vector<double>> samples{{1.0, 0.0}, {0.7, 1.2}, {2.0, -0.4}};
    for (const auto& f : entry.fields) {
        std::string text;
        for (const auto& c : f.components) text += (text.empty() ? "" : ", ") + c;
        const auto field = kvf::parse_field(text, sphere);
        const auto check = kvf::verify_killing(sphere, field, samples, 1e-9);
        std::cout << f.label << ": " << (check.passed ? "Killing" : "not Killing") << ", max |L_xi g| = "
                  << check.max_residual << "\n";
    }
}
