#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "redag/sim.hpp"

namespace redag {

// Event log, one line per event: timestamp_us,kind,task_id,instance,worker
void write_trace_csv(const SimTrace& trace, std::ostream& os);
std::vector<TraceEvent> read_trace_csv(std::istream& is);
std::vector<TraceEvent> load_trace_csv(const std::string& path);

// Per-job table:
// task_id,instance,release_us,start_us,finish_us,deadline_us,response_us,
// lateness_us,missed,preemptions,deferred
// Censored jobs leave finish/response/lateness empty and missed 0.
void write_jobs_csv(const SimTrace& trace, std::ostream& os);

}  // namespace redag
