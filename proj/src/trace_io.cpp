#include "redag/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>

namespace redag {

void write_trace_csv(const SimTrace& trace, std::ostream& os) {
    os << "timestamp_us,kind,task_id,instance,worker\n";
    for (const auto& e : trace.events)
        os << e.timestamp << "," << to_string(e.kind) << "," << e.task_id << "," << e.instance
           << "," << e.worker << "\n";
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream is(line);
    while (std::getline(is, field, ',')) out.push_back(field);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

std::int64_t parse_int(const std::string& s, int lineno) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
        throw MalformedTrace("line " + std::to_string(lineno) + ": bad integer '" + s + "'");
    return v;
}

}  // namespace

std::vector<TraceEvent> read_trace_csv(std::istream& is) {
    std::vector<TraceEvent> events;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (lineno == 1 && line.rfind("timestamp_us", 0) == 0) continue;
        auto fields = split_csv(line);
        if (fields.size() != 5)
            throw MalformedTrace("line " + std::to_string(lineno) + ": expected 5 fields");
        TraceEvent ev;
        ev.timestamp = parse_int(fields[0], lineno);
        auto kind = event_kind_from_string(fields[1]);
        if (!kind)
            throw MalformedTrace("line " + std::to_string(lineno) + ": unknown event kind '" +
                                 fields[1] + "'");
        ev.kind = *kind;
        ev.task_id = static_cast<int>(parse_int(fields[2], lineno));
        ev.instance = static_cast<int>(parse_int(fields[3], lineno));
        ev.worker = static_cast<int>(parse_int(fields[4], lineno));
        events.push_back(ev);
    }
    return events;
}

std::vector<TraceEvent> load_trace_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw MalformedTrace("cannot open trace file " + path);
    return read_trace_csv(in);
}

void write_jobs_csv(const SimTrace& trace, std::ostream& os) {
    os << "task_id,instance,release_us,start_us,finish_us,deadline_us,response_us,"
          "lateness_us,missed,preemptions,deferred\n";
    for (const auto& j : trace.jobs) {
        os << j.task_id << "," << j.instance << "," << j.release << ",";
        if (j.start >= 0) os << j.start;
        os << ",";
        if (j.completed())
            os << j.finish << "," << j.deadline << "," << j.response() << "," << j.lateness();
        else
            os << "," << j.deadline << ",,";
        os << "," << (j.missed() ? 1 : 0) << "," << j.preemptions << ","
           << (j.deferred_by_cap ? 1 : 0) << "\n";
    }
}

}  // namespace redag
