#pragma once

#include "ocbf/geometry.hpp"

#include <functional>
#include <map>
#include <optional>
#include <variant>
#include <vector>

namespace ocbf {

enum class Sequencing { Fifo, Dr };

std::string to_string(Sequencing s);
Sequencing sequencing_from_string(const std::string& s);

struct QueueRow {
    int cav_id = 0;
    int current_lane = 0;
    int original_lane = 0;
    std::vector<MpToken> mps;       ///< crossing order; includes the floating MP of a lane change
    std::optional<MpToken> hidden;  ///< Zone(origin lane), claimed implicitly while driving in it
    bool passed_all = false;

    bool holds(const MpToken& t) const;
};

struct ConflictEntry {
    MpToken mp;
    int cav_id = 0;
};

enum class ConflictCondition { FullMatch, Mixed, LateralOnly };

struct ConflictSet {
    std::vector<ConflictEntry> omega;
    std::optional<int> ip;
    ConflictCondition condition = ConflictCondition::LateralOnly;

    /// Distinct conflicting CAV ids, ascending.
    std::vector<int> ids() const;
};

class QueueTable {
public:
    const std::vector<QueueRow>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    bool empty() const { return rows_.empty(); }
    /// Row index of a CAV, or -1.
    int index_of(int cav_id) const;
    const QueueRow& row(int cav_id) const;

    void insert(std::size_t pos, QueueRow row);
    void remove(int cav_id);
    void set_lane(int cav_id, int lane);
    void mark_passed(int cav_id);
    /// Rows of `lane` are re-ordered by descending position within the slots they occupy.
    void reorder_lane(int lane, const std::map<int, double>& position);

private:
    QueueRow& mutable_row(int cav_id);
    std::vector<QueueRow> rows_;
};

/// Appends a row; simultaneous arrivals must be admitted in ascending lane order.
void insert_fifo(QueueTable& table, QueueRow row);

/// Per-CAV data for the resequencing surrogate cost.
struct DrEstimate {
    std::vector<std::pair<MpToken, double>> mp_times;  ///< estimated arrival at each fixed MP
    double exit_time = 0.0;
};

/// Sum of exit times after pushing each CAV back so that it reaches every shared MP
/// at least `headway` seconds after the previous CAV (in `order`) that used it.
double dr_cost(const std::vector<int>& order, const std::map<int, DrEstimate>& est, double headway);

/// Inserts at the feasible position minimizing dr_cost; ties go to the later position.
/// Best position among those behind every CAV of the same current lane that pass `admissible`.
std::optional<std::size_t> dr_position(const QueueTable& table, const QueueRow& row,
                                       const std::map<int, DrEstimate>& est, double headway,
                                       const std::function<bool(std::size_t)>& admissible = {});
/// Inserts at dr_position, falling back to the end of the table. Returns the index.
std::size_t insert_dr(QueueTable& table, QueueRow row, const std::map<int, DrEstimate>& est,
                      double headway, const std::function<bool(std::size_t)>& admissible = {});

/// Default rule for the physically preceding CAV: same current lane and not yet past all MPs.
bool default_precedes(const QueueRow& candidate, const QueueRow& self);

using PrecedesFn = std::function<bool(const QueueRow& candidate, const QueueRow& self)>;

/// Conflict search over higher-priority rows.
ConflictSet find_conflicts(const QueueTable& table, int cav_id,
                           const PrecedesFn& precedes = default_precedes);

struct EntryEvent {
    QueueRow row;
};
struct DepartureEvent {
    int cav_id = 0;
};
struct LaneChangeCompleted {
    int cav_id = 0;
    int lane = 0;
};
struct OvertakeEvent {
    int lane = 0;
    std::map<int, double> position;
};
using QueueEvent = std::variant<EntryEvent, DepartureEvent, LaneChangeCompleted, OvertakeEvent>;

/// Entry events use FIFO insertion.
void handle_event(QueueTable& table, const QueueEvent& ev);

}  // namespace ocbf
