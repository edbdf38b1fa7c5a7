#include "redag/workload_io.hpp"

#include <fstream>

namespace redag {

namespace {

using nlohmann::json;

const json& require_field(const json& j, const char* key, const std::string& path) {
    auto it = j.find(key);
    if (it == j.end()) throw ParseError(path + "/" + key, "missing required field");
    return *it;
}

std::int64_t as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer())
        throw ParseError(path, "expected an integer, got " + std::string(j.type_name()));
    return j.get<std::int64_t>();
}

time_us as_positive_us(const json& j, const std::string& path) {
    std::int64_t v = as_int(j, path);
    if (v <= 0) throw ParseError(path, "expected a positive integer microsecond value");
    return v;
}

}  // namespace

Workload workload_from_json(const json& doc) {
    if (!doc.is_object()) throw ParseError("/", "workload document must be an object");

    Workload w;
    if (auto it = doc.find("deadline_scale"); it != doc.end()) {
        if (!it->is_number()) throw ParseError("/deadline_scale", "expected a number");
        w.deadline_scale = it->get<double>();
        if (!(w.deadline_scale > 0.0))
            throw ParseError("/deadline_scale", "must be > 0");
    }

    const json& dags = require_field(doc, "dags", "");
    if (!dags.is_array()) throw ParseError("/dags", "expected an array");

    for (std::size_t di = 0; di < dags.size(); ++di) {
        const std::string dpath = "/dags/" + std::to_string(di);
        const json& jd = dags[di];
        if (!jd.is_object()) throw ParseError(dpath, "expected an object");

        DagSpec dag;
        dag.dag_id = static_cast<int>(as_int(require_field(jd, "dag_id", dpath), dpath + "/dag_id"));

        if (auto it = jd.find("max_active"); it != jd.end() && !it->is_null()) {
            std::int64_t cap = as_int(*it, dpath + "/max_active");
            if (cap < 1) throw ParseError(dpath + "/max_active", "must be >= 1 or null");
            dag.max_active = static_cast<int>(cap);
        }

        const json& tasks = require_field(jd, "tasks", dpath);
        if (!tasks.is_array()) throw ParseError(dpath + "/tasks", "expected an array");
        for (std::size_t ti = 0; ti < tasks.size(); ++ti) {
            const std::string tpath = dpath + "/tasks/" + std::to_string(ti);
            const json& jt = tasks[ti];
            if (!jt.is_object()) throw ParseError(tpath, "expected an object");

            Task t;
            t.id = static_cast<int>(as_int(require_field(jt, "id", tpath), tpath + "/id"));
            t.dag_id = dag.dag_id;
            t.wcet = as_positive_us(require_field(jt, "wcet_us", tpath), tpath + "/wcet_us");
            t.period = as_positive_us(require_field(jt, "period_us", tpath), tpath + "/period_us");
            if (auto it = jt.find("deadline_us"); it != jt.end() && !it->is_null())
                t.deadline = as_positive_us(*it, tpath + "/deadline_us");
            else
                t.deadline = t.period;  // implicit deadline
            if (auto it = jt.find("criticality"); it != jt.end() && !it->is_null())
                t.criticality = static_cast<int>(as_int(*it, tpath + "/criticality"));
            if (auto it = jt.find("label"); it != jt.end() && !it->is_null()) {
                if (!it->is_string()) throw ParseError(tpath + "/label", "expected a string");
                t.label = it->get<std::string>();
            }
            dag.tasks.push_back(std::move(t));
        }

        if (auto it = jd.find("edges"); it != jd.end() && !it->is_null()) {
            if (!it->is_array()) throw ParseError(dpath + "/edges", "expected an array");
            for (std::size_t ei = 0; ei < it->size(); ++ei) {
                const std::string epath = dpath + "/edges/" + std::to_string(ei);
                const json& je = (*it)[ei];
                if (!je.is_array() || je.size() != 2)
                    throw ParseError(epath, "expected a [from_id, to_id] pair");
                Edge e;
                e.from = static_cast<int>(as_int(je[0], epath + "/0"));
                e.to = static_cast<int>(as_int(je[1], epath + "/1"));
                dag.edges.push_back(e);
            }
        }
        w.dags.push_back(std::move(dag));
    }
    return w;
}

json workload_to_json(const Workload& w, const json* provenance) {
    json doc;
    doc["deadline_scale"] = w.deadline_scale;
    doc["dags"] = json::array();
    for (const auto& d : w.dags) {
        json jd;
        jd["dag_id"] = d.dag_id;
        jd["max_active"] = d.max_active ? json(*d.max_active) : json(nullptr);
        jd["tasks"] = json::array();
        for (const auto& t : d.tasks) {
            json jt;
            jt["id"] = t.id;
            jt["label"] = t.label;
            jt["wcet_us"] = t.wcet;
            jt["period_us"] = t.period;
            jt["deadline_us"] = t.deadline;
            jt["criticality"] = t.criticality;
            jd["tasks"].push_back(std::move(jt));
        }
        jd["edges"] = json::array();
        for (const auto& e : d.edges) jd["edges"].push_back(json::array({e.from, e.to}));
        doc["dags"].push_back(std::move(jd));
    }
    if (provenance) doc["provenance"] = *provenance;
    return doc;
}

Workload load_workload(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, "cannot open file");
    json doc;
    try {
        in >> doc;
    } catch (const json::parse_error& e) {
        throw ParseError(path, e.what());
    }
    return workload_from_json(doc);
}

void save_workload(const Workload& w, const std::string& path, const json* provenance) {
    std::ofstream out(path);
    if (!out) throw ParseError(path, "cannot open file for writing");
    out << workload_to_json(w, provenance).dump(2) << "\n";
}

std::string element_path(const Workload& w, int dag_id, int task_id) {
    for (std::size_t di = 0; di < w.dags.size(); ++di) {
        if (w.dags[di].dag_id != dag_id) continue;
        if (task_id < 0) return "/dags/" + std::to_string(di);
        for (std::size_t ti = 0; ti < w.dags[di].tasks.size(); ++ti)
            if (w.dags[di].tasks[ti].id == task_id)
                return "/dags/" + std::to_string(di) + "/tasks/" + std::to_string(ti);
        return "/dags/" + std::to_string(di);
    }
    return "/dags";
}

}  // namespace redag
