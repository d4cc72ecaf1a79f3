#include <pybind11/pybind11.h>

PYBIND11_MODULE(_renormlab, m) { m.doc() = "renormalization workbench core"; }
