// Copyright 2026 The NIC Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


// Python bindings: PNG I/O, zoo-backed encode/decode, the range coder, the
// truncated Gaussian fit and the RD metrics.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <utility>
#include <vector>

#include "nic/container.h"
#include "nic/errors.h"
#include "nic/image_io.h"
#include "nic/overfitter.h"
#include "nic/pipeline.h"
#include "nic/range_coder.h"
#include "nic/rd.h"
#include "nic/zoo.h"

namespace py = pybind11;

namespace nic {
namespace {

using ImageArray = py::array_t<uint8_t, py::array::c_style | py::array::forcecast>;

Image FromArray(const ImageArray& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw InvalidArgument("expected an (H, W, 3) uint8 array");
  Image img;
  img.height = static_cast<int>(a.shape(0));
  img.width = static_cast<int>(a.shape(1));
  img.rgb.assign(a.data(), a.data() + a.size());
  return img;
}

ImageArray ToArray(const Image& img) {
  ImageArray a({img.height, img.width, 3});
  std::memcpy(a.mutable_data(), img.rgb.data(), img.rgb.size());
  return a;
}

py::bytes ToBytes(const std::vector<uint8_t>& v) {
  return py::bytes(reinterpret_cast<const char*>(v.data()), v.size());
}

std::vector<uint8_t> FromBytes(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

RdCurve CurveFrom(const std::vector<std::pair<double, double>>& points) {
  std::vector<RdPoint> p;
  for (const auto& [rate, psnr] : points) p.push_back({rate, psnr});
  return RdCurve::FromPoints(std::move(p));
}

py::dict Encode(Zoo& zoo, const ImageArray& array, int quality, bool overfit, int layers,
                int iterations, double learning_rate, double q_init, uint64_t seed, bool allow_skip) {
  const Image image = FromArray(array);
  if (quality < 0 || quality > 255) throw InvalidArgument("quality must fit in 8 bits");
  const ModelParams& params = zoo.Model(quality);
  py::dict out;
  if (!overfit) {
    const BaselineEncoding e = EncodeBaseline(image, params, static_cast<uint8_t>(quality));
    out["data"] = ToBytes(e.bytes);
    out["psnr"] = e.psnr;
    out["reconstruction"] = ToArray(e.reconstruction);
    return out;
  }
  OverfitConfig c;
  c.layers = layers;
  c.iterations = iterations;
  c.learning_rate = learning_rate;
  c.q_init = q_init;
  c.seed = seed;
  const RdInterp r = ImageRateFunction(image, zoo, quality);
  const OverfitEncoding e = EncodeOverfit(image, params, static_cast<uint8_t>(quality), r, c, allow_skip);
  out["data"] = ToBytes(e.bytes);
  out["psnr"] = e.skipped ? e.baseline.psnr : e.result.best_psnr;
  out["reconstruction"] = ToArray(e.skipped ? e.baseline.reconstruction : e.result.best_reconstruction);
  out["baseline_bits"] = 8 * e.baseline.bytes.size();
  out["baseline_psnr"] = e.baseline.psnr;
  out["initial_acc"] = e.result.initial_acc;
  out["best_acc"] = e.result.best_acc;
  out["best_iteration"] = e.result.best_iteration;
  out["q"] = e.result.best.q;
  out["skipped"] = e.skipped;
  return out;
}

}  // namespace
}  // namespace nic

PYBIND11_MODULE(_nic, m) {
  using namespace nic;
  m.doc() = "Learned image codec with per-image decoder bias overfitting";

  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const ShapeError& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const IoError& e) {
      PyErr_SetString(PyExc_OSError, e.what());
    }
  });
  // Registered last so they are tried first.
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
  py::register_exception<NumericError>(m, "NumericError", PyExc_ArithmeticError);

  m.def("read_png", [](const std::string& path) { return ToArray(ReadPng(path)); }, py::arg("path"));
  m.def("write_png", [](const ImageArray& a, const std::string& path) { WritePng(FromArray(a), path); },
        py::arg("image"), py::arg("path"));
  m.def("psnr", [](const ImageArray& a, const ImageArray& b) {
    return Psnr(FromArray(a).rgb, FromArray(b).rgb);
  }, py::arg("reference"), py::arg("test"));
  m.def("bd_rate", [](const std::vector<std::pair<double, double>>& a,
                      const std::vector<std::pair<double, double>>& b) {
    return BdRate(CurveFrom(a), CurveFrom(b));
  }, py::arg("reference"), py::arg("test"), "BD-rate in percent of `test` against `reference`; points are (rate, psnr).");

  m.def("encode_symbols", [](const std::vector<int32_t>& symbols, const std::vector<double>& pmf, int32_t min_symbol) {
    const std::vector<CdfTable> tables(symbols.size(), BuildCdfTable(pmf, min_symbol));
    return ToBytes(EncodeSymbols(symbols, tables));
  }, py::arg("symbols"), py::arg("pmf"), py::arg("min_symbol"));
  m.def("decode_symbols", [](const py::bytes& data, const std::vector<double>& pmf, int32_t min_symbol, size_t count) {
    const std::vector<CdfTable> tables(count, BuildCdfTable(pmf, min_symbol));
    return DecodeSymbols(FromBytes(data), tables, count);
  }, py::arg("data"), py::arg("pmf"), py::arg("min_symbol"), py::arg("count"));

  m.def("fit_truncated_gaussian", [](const std::vector<int32_t>& symbols) {
    const TruncatedGaussianFit f = FitTruncatedGaussian(symbols);
    py::dict d;
    d["mean"] = f.mean;
    d["sigma"] = f.sigma;
    d["s_min"] = f.s_min;
    d["s_max"] = f.s_max;
    d["log_likelihood"] = f.log_likelihood;
    return d;
  }, py::arg("symbols"));

  m.def("container_info", [](const py::bytes& data) {
    const Container c = ReadContainer(FromBytes(data));
    py::dict d;
    d["version"] = c.header.version;
    d["quality"] = c.header.quality;
    d["layers"] = c.header.layers;
    d["width"] = c.header.width;
    d["height"] = c.header.height;
    d["mb_bytes"] = c.mb.size();
    d["sb_bytes"] = c.sb.size();
    d["eb_bytes"] = ExtraSectionBytes(c);
    return d;
  }, py::arg("data"));

  py::class_<Zoo>(m, "Zoo")
      .def(py::init<std::string>(), py::arg("directory"))
      .def_property_readonly("qualities", [](const Zoo& z) {
        std::vector<int> q;
        for (const auto& e : z.manifest().entries) {
          if (!e.failed) q.push_back(e.quality);
        }
        return q;
      })
      .def("encode", &Encode, py::arg("image"), py::arg("quality"), py::arg("overfit") = false,
           py::arg("layers") = 1, py::arg("iterations") = 2500, py::arg("learning_rate") = 1e-3,
           py::arg("q_init") = 10.0, py::arg("seed") = 0, py::arg("allow_skip") = false)
      .def("decode", [](Zoo& z, const py::bytes& data) {
        const Container c = ReadContainer(FromBytes(data));
        return ToArray(DecodeContainer(c, z.Model(c.header.quality)));
      }, py::arg("data"));
}
