#pragma once

// Bundled scenarios, identical to configs/dirichlet.json and configs/neumann.json.

#include <optional>
#include <string_view>

namespace pdeode::scenarios {

inline constexpr std::string_view dirichlet = R"json({
  "name": "dirichlet",
  "plant": {
    "theta1": "pi/2",
    "theta2": 0,
    "p": "1",
    "q_tilde": "-3",
    "zeta_m": 0.25,
    "trace_kind": "dirichlet",
    "q_c": 4
  },
  "ode": {
    "A": [
      [0, "-1/4", "-1/5", "1/5", "1/6"],
      ["1/2", 1, -4, "9/2", "7/2"],
      ["-9/4", "-1/2", -14, 23, 16],
      ["-1/5", "-1/2", "-11/4", "1/10", "5/4"],
      ["-4/3", "-4/3", -9, 9, "5/2"]
    ],
    "B": ["-7/2", "-3/2", "-1/10", "1/2", 1],
    "C": ["-1/10", "-1/3", -4, "7/8", "7/8"]
  },
  "certify": {
    "runs": [
      {"N": 3, "eta": 0},
      {"N": 9, "eta": 0.5}
    ],
    "alpha_grid": {"min": 2.01, "max": 1000, "count": 40},
    "beta_grid": {"min": 1e-4, "max": 1e6, "count": 60}
  },
  "simulate": {
    "n_sim": 100,
    "t_end": 10,
    "dt_out": 0.01,
    "integrator": "exact-propagator",
    "substeps": 1,
    "w0": "-1 + xi^2",
    "x0": [-2, 1, 2, 1, 3],
    "certificate_run": 2
  }
}
)json";

inline constexpr std::string_view neumann = R"json({
  "name": "neumann",
  "plant": {
    "theta1": 0,
    "theta2": "pi/2",
    "p": "1",
    "q_tilde": "-3",
    "zeta_m": 0.25,
    "trace_kind": "neumann",
    "q_c": 4
  },
  "ode": {
    "A": [
      ["-1/4", "-1/6", 2, 1, "1/12"],
      ["-3/2", "-3/2", 5, 5, "1/6"],
      ["3/2", -4, "-15/2", -5, "-1/3"],
      ["-13/2", 22, 22, -14, "-1/2"],
      ["1/7", "-1/2", "-1/2", "1/5", "-5/2"]
    ],
    "B": ["-5/4", "2/3", "1/6", "-1/6", 0],
    "C": ["-2/5", "-5/4", "3/2", "1/3", "1/40"]
  },
  "certify": {
    "runs": [
      {"N": 2, "eta": 0},
      {"N": 10, "eta": 0.4}
    ],
    "epsilon": ["1/6", "1/4", "1/2"],
    "alpha_grid": {"min": 2.01, "max": 1000, "count": 40},
    "beta_grid": {"min": 1e-4, "max": 1e6, "count": 60}
  },
  "simulate": {
    "n_sim": 100,
    "t_end": 10,
    "dt_out": 0.01,
    "integrator": "exact-propagator",
    "substeps": 1,
    "w0": "5*xi*(1 - xi)^2*cos(3*pi*xi)",
    "x0": [-1, 1, -2, 2, -1],
    "certificate_run": 2
  }
}
)json";

[[nodiscard]] inline std::optional<std::string_view> find(std::string_view id) {
  if (id == "dirichlet") return dirichlet;
  if (id == "neumann") return neumann;
  return std::nullopt;
}

}  // namespace pdeode::scenarios
