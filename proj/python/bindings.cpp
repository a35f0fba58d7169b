#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "s3/corpus.hpp"
#include "s3/error.hpp"
#include "s3/fql.hpp"
#include "s3/json_io.hpp"
#include "s3/metadata.hpp"
#include "s3/service.hpp"

namespace py = pybind11;
using nlohmann::json;

namespace {

// Results cross the boundary as JSON text; the Python package decodes them.
std::string dump(const json& j) { return j.dump(); }

json load(const std::string& text) { return json::parse(text); }

class PyService {
 public:
  PyService(const std::string& config_json, const std::string& base_dir)
      : service_(s3::service::parse_config(load(config_json), base_dir)) {}

  std::string scan(std::optional<std::string> root) {
    py::gil_scoped_release release;
    return dump(service_.scan(root ? std::optional<std::filesystem::path>(*root) : std::nullopt));
  }
  std::string stats() const { return dump(service_.stats()); }
  std::string fql(const std::string& query, std::optional<std::string> root, bool strict) {
    py::gil_scoped_release release;
    return dump(service_.fql(query, root ? std::optional<std::filesystem::path>(*root) : std::nullopt, strict));
  }
  std::string ask(const std::string& request) {
    py::gil_scoped_release release;
    return dump(service_.ask(load(request)));
  }
  std::string ingest(const std::string& request) {
    py::gil_scoped_release release;
    return dump(service_.ingest(load(request)));
  }
  std::string session(const std::string& id) { return dump(service_.session(id)); }

 private:
  s3::service::Service service_;
};

}  // namespace

PYBIND11_MODULE(_s3, m) {
  m.doc() = "Native core of the s3code package";

  static py::exception<s3::Error> error(m, "Error", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const s3::Error& e) {
      py::object loc = e.location() ? py::cast(*e.location()) : py::none();
      PyErr_SetObject(error.ptr(), py::make_tuple(std::string(s3::errc_name(e.code())), e.what(), loc).ptr());
    } catch (const json::exception& e) {
      PyErr_SetObject(error.ptr(), py::make_tuple("SchemaViolation", e.what(), py::none()).ptr());
    }
  });

  m.def("canonical_fql", [](const std::string& text, bool strict) {
    return s3::fql::render_fql(
        s3::fql::parse_fql(text, strict ? s3::fql::ParseMode::Strict : s3::fql::ParseMode::Lenient));
  }, py::arg("text"), py::arg("strict") = false);

  m.def("normalize_version", [](const std::string& tag) {
    const auto v = s3::fql::normalize_version(tag);
    return py::make_tuple(v.major, v.minor);
  }, py::arg("tag"));

  m.def("scan", [](const std::string& root) {
    py::gil_scoped_release release;
    const auto snap = s3::corpus::scan_tree(root);
    return dump(s3::json_io::stats_json(&snap));
  }, py::arg("root"));

  m.def("run_fql", [](const std::string& query, const std::string& root, bool strict) {
    py::gil_scoped_release release;
    const auto q = s3::fql::parse_fql(query, strict ? s3::fql::ParseMode::Strict : s3::fql::ParseMode::Lenient);
    const auto snap = s3::corpus::scan_tree(root);
    return dump(s3::json_io::to_json(s3::fql::execute(q, snap), q));
  }, py::arg("query"), py::arg("root"), py::arg("strict") = false);

  m.def("parse_dot", [](const std::string& text) {
    return dump(s3::json_io::to_json(s3::metadata::parse_dot(text)));
  }, py::arg("text"));

  m.def("parse_loop_matrix", [](const std::string& text) {
    return dump(s3::json_io::to_json(s3::metadata::parse_loop_matrix(text)));
  }, py::arg("text"));

  m.def("query_tables", [](const std::vector<std::pair<std::string, std::string>>& csvs, const std::string& sql) {
    s3::metadata::TableCatalog catalog;
    for (const auto& [name, text] : csvs) catalog.push_back(s3::metadata::load_csv(name, text));
    const auto plan = s3::metadata::parse_select(sql);
    return dump(s3::json_io::to_json(s3::metadata::query_tables(catalog, plan)));
  }, py::arg("tables"), py::arg("sql"));

  py::class_<PyService>(m, "Service")
      .def(py::init<const std::string&, const std::string&>(), py::arg("config_json"), py::arg("base_dir"))
      .def("scan", &PyService::scan, py::arg("root") = std::nullopt)
      .def("stats", &PyService::stats)
      .def("fql", &PyService::fql, py::arg("query"), py::arg("root") = std::nullopt, py::arg("strict") = false)
      .def("ask", &PyService::ask, py::arg("request"))
      .def("ingest", &PyService::ingest, py::arg("request"))
      .def("session", &PyService::session, py::arg("id"));
}
