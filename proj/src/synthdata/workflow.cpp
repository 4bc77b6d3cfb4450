#include <map>
#include <stdexcept>
#include <string>

#include "fedcy/synthdata.hpp"

namespace fedcy::synthdata {

void WorkflowModel::validate() const {
  if (num_phases < 1) throw std::invalid_argument("workflow.num_phases must be positive");
  if (sequential_prefix < 0 || sequential_prefix > num_phases) {
    throw std::invalid_argument("workflow.sequential_prefix must lie in [0, num_phases]");
  }
  if (repeatable_phase != 0 && (repeatable_phase <= sequential_prefix || repeatable_phase > num_phases)) {
    throw std::invalid_argument("workflow.repeatable_phase must be 0 or a phase after the sequential prefix");
  }
  if (!(repeat_probability >= 0.0 && repeat_probability <= 1.0)) {
    throw std::invalid_argument("workflow.repeat_probability must lie in [0, 1]");
  }
  if (mean_durations.size() != static_cast<std::size_t>(num_phases)) {
    throw std::invalid_argument("workflow.mean_durations needs one entry per phase");
  }
  for (double d : mean_durations) {
    if (!(d >= 1.0)) throw std::invalid_argument("workflow.mean_durations entries must be at least 1 frame");
  }
  if (!(duration_log_sigma >= 0.0)) throw std::invalid_argument("workflow.duration_log_sigma must be nonnegative");
}

bool validate_workflow(std::span<const int> labels, const WorkflowModel& workflow) {
  if (labels.empty()) throw std::invalid_argument("validate_workflow: empty label sequence");
  for (int l : labels) {
    if (l < 1 || l > workflow.num_phases) {
      throw std::invalid_argument("validate_workflow: unknown phase id " + std::to_string(l));
    }
  }
  std::vector<int> runs;
  for (int l : labels) {
    if (runs.empty() || runs.back() != l) runs.push_back(l);
  }
  const auto prefix = static_cast<std::size_t>(workflow.sequential_prefix);
  if (runs.size() < prefix) return false;
  for (std::size_t i = 0; i < prefix; ++i) {
    if (runs[i] != static_cast<int>(i) + 1) return false;
  }
  std::map<int, int> seen;
  for (std::size_t i = prefix; i < runs.size(); ++i) {
    const int phase = runs[i];
    if (phase <= workflow.sequential_prefix) return false;
    const int allowed = phase == workflow.repeatable_phase ? 2 : 1;
    if (++seen[phase] > allowed) return false;
  }
  return true;
}

std::string to_string(Role r) {
  switch (r) {
    case Role::labeled: return "labeled";
    case Role::unlabeled: return "unlabeled";
    case Role::held_out: return "held_out";
  }
  return "unlabeled";
}

std::string to_string(Split s) {
  switch (s) {
    case Split::train: return "train";
    case Split::validation: return "validation";
    case Split::test: return "test";
  }
  return "train";
}

Role role_from_string(const std::string& s) {
  if (s == "labeled") return Role::labeled;
  if (s == "unlabeled") return Role::unlabeled;
  if (s == "held_out") return Role::held_out;
  throw std::invalid_argument("unknown client role '" + s + "'");
}

Split split_from_string(const std::string& s) {
  if (s == "train") return Split::train;
  if (s == "validation") return Split::validation;
  if (s == "test") return Split::test;
  throw std::invalid_argument("unknown split '" + s + "'");
}

}  // namespace fedcy::synthdata
