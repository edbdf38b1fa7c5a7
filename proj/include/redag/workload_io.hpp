#pragma once

#include <stdexcept>
#include <string>

#include <json.hpp>

#include "redag/task_model.hpp"

namespace redag {

// Parse/serialization error carrying the JSON-pointer-style path of the
// offending element.
class ParseError : public std::runtime_error {
public:
    ParseError(std::string path, const std::string& message)
        : std::runtime_error(path + ": " + message), path_(std::move(path)) {}
    const std::string& path() const { return path_; }

private:
    std::string path_;
};

// Canonical workload document:
//   { "deadline_scale": 1.0,
//     "dags": [ { "dag_id": 1, "max_active": 2 | null,
//                 "tasks": [ { "id", "label", "wcet_us", "period_us",
//                              "deadline_us" (optional, defaults to period),
//                              "criticality" }, ... ],
//                 "edges": [ [from_id, to_id], ... ] }, ... ],
//     "provenance": { ... }  (optional, preserved opaque) }
Workload workload_from_json(const nlohmann::json& doc);
nlohmann::json workload_to_json(const Workload& w,
                                const nlohmann::json* provenance = nullptr);

Workload load_workload(const std::string& path);
void save_workload(const Workload& w, const std::string& path,
                   const nlohmann::json* provenance = nullptr);

// JSON-pointer-style path of a DAG or task element inside a workload
// document, for reporting semantic violations against the file.
std::string element_path(const Workload& w, int dag_id, int task_id = -1);

}  // namespace redag
