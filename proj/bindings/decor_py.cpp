#include <pybind11/pybind11.h>

namespace py = pybind11;

PYBIND11_MODULE(_decor, m) {
  m.doc() = "wafer-map clustering and outlier detection core";
  m.attr("__version__") = "0.1.0";
}
