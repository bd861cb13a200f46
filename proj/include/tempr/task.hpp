#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace tempr {

enum class TaskKind { TG, DTG, VHD, GVQA, TAL };

inline constexpr std::array<TaskKind, 5> kAllTasks = {TaskKind::TG, TaskKind::DTG, TaskKind::VHD,
                                                      TaskKind::GVQA, TaskKind::TAL};

constexpr std::string_view to_string(TaskKind t) {
  switch (t) {
    case TaskKind::TG: return "TG";
    case TaskKind::DTG: return "DTG";
    case TaskKind::VHD: return "VHD";
    case TaskKind::GVQA: return "GVQA";
    case TaskKind::TAL: return "TAL";
  }
  return "?";
}

constexpr std::optional<TaskKind> task_from_string(std::string_view s) {
  for (TaskKind t : kAllTasks) {
    if (to_string(t) == s) return t;
  }
  return std::nullopt;
}

// Which localization reward a task is scored with.
enum class Correspondence { OneToOne, ManyToOne, ManyToMany };

constexpr Correspondence correspondence(TaskKind t) {
  switch (t) {
    case TaskKind::TG:
    case TaskKind::DTG: return Correspondence::OneToOne;
    case TaskKind::VHD:
    case TaskKind::GVQA: return Correspondence::ManyToOne;
    case TaskKind::TAL: return Correspondence::ManyToMany;
  }
  return Correspondence::OneToOne;
}

}  // namespace tempr
