// The Cahen-Wallach product whose Killing algebra does not split.

#include <iostream>

#include "kvf/kvf.hpp"

int main() {
    const kvf::Counterexample ce = kvf::cw_counterexample({1.0}, {-1.0});
    const kvf::ManifoldSpec& m = ce.product.combined;
    std::cout << "field:";
    for (std::size_t i = 0; i < m.dimension(); ++i)
        if (ce.field_text[i] != "0") std::cout << " (" << ce.field_text[i] << ") d/d" << m.coords[i];
    std::cout << "\n";

    const auto check = kvf::verify_killing(m, ce.field, {m.base_point, {0.3, -0.2, 0.5, 0.1, 0.4, -0.6}}, 1e-10);
    std::cout << "Killing: " << std::boolalpha << check.passed << "\n";

    const kvf::DecompositionReport d = kvf::decomposition_check(ce.product.a, ce.product.b);
    std::cout << "dim kill: " << d.dim_a << " + " << d.dim_b << " vs product " << d.dim_product
              << " (excess " << d.excess << ")\n";
}
