#include "ocbf/coordinator.hpp"

#include <algorithm>
#include <limits>

namespace ocbf {

std::string to_string(Sequencing s) { return s == Sequencing::Dr ? "dr" : "fifo"; }

Sequencing sequencing_from_string(const std::string& s) {
    if (s == "fifo" || s == "FIFO") return Sequencing::Fifo;
    if (s == "dr" || s == "DR") return Sequencing::Dr;
    throw ConfigError("unknown sequencing policy '" + s + "'");
}

bool QueueRow::holds(const MpToken& t) const {
    return (hidden && *hidden == t) || std::find(mps.begin(), mps.end(), t) != mps.end();
}

std::vector<int> ConflictSet::ids() const {
    std::vector<int> out;
    for (const auto& e : omega) out.push_back(e.cav_id);
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

int QueueTable::index_of(int cav_id) const {
    for (std::size_t k = 0; k < rows_.size(); ++k)
        if (rows_[k].cav_id == cav_id) return static_cast<int>(k);
    return -1;
}

const QueueRow& QueueTable::row(int cav_id) const {
    const int k = index_of(cav_id);
    if (k < 0) throw std::out_of_range("unknown CAV " + std::to_string(cav_id));
    return rows_[k];
}

QueueRow& QueueTable::mutable_row(int cav_id) {
    const int k = index_of(cav_id);
    if (k < 0) throw std::out_of_range("unknown CAV " + std::to_string(cav_id));
    return rows_[k];
}

void QueueTable::insert(std::size_t pos, QueueRow row) {
    if (index_of(row.cav_id) >= 0)
        throw std::invalid_argument("duplicate CAV " + std::to_string(row.cav_id));
    pos = std::min(pos, rows_.size());
    rows_.insert(rows_.begin() + static_cast<std::ptrdiff_t>(pos), std::move(row));
}

void QueueTable::remove(int cav_id) {
    const int k = index_of(cav_id);
    if (k < 0) throw std::out_of_range("unknown CAV " + std::to_string(cav_id));
    rows_.erase(rows_.begin() + k);
}

void QueueTable::set_lane(int cav_id, int lane) { mutable_row(cav_id).current_lane = lane; }

void QueueTable::mark_passed(int cav_id) { mutable_row(cav_id).passed_all = true; }

void QueueTable::reorder_lane(int lane, const std::map<int, double>& position) {
    std::vector<std::size_t> slots;
    std::vector<QueueRow> members;
    for (std::size_t k = 0; k < rows_.size(); ++k) {
        if (rows_[k].current_lane == lane && position.count(rows_[k].cav_id)) {
            slots.push_back(k);
            members.push_back(rows_[k]);
        }
    }
    std::stable_sort(members.begin(), members.end(), [&](const QueueRow& a, const QueueRow& b) {
        return position.at(a.cav_id) > position.at(b.cav_id);
    });
    for (std::size_t k = 0; k < slots.size(); ++k) rows_[slots[k]] = std::move(members[k]);
}

void insert_fifo(QueueTable& table, QueueRow row) { table.insert(table.size(), std::move(row)); }

double dr_cost(const std::vector<int>& order, const std::map<int, DrEstimate>& est, double headway) {
    std::map<MpToken, double> last;
    double total = 0.0;
    for (int id : order) {
        const DrEstimate& e = est.at(id);
        double shift = 0.0;
        for (const auto& [mp, t] : e.mp_times) {
            double arrival = t + shift;
            auto it = last.find(mp);
            if (it != last.end()) arrival = std::max(arrival, it->second + headway);
            shift = arrival - t;
            last[mp] = arrival;
        }
        total += e.exit_time + shift;
    }
    return total;
}

std::optional<std::size_t> dr_position(const QueueTable& table, const QueueRow& row,
                                       const std::map<int, DrEstimate>& est, double headway,
                                       const std::function<bool(std::size_t)>& admissible) {
    std::size_t first = 0;
    for (std::size_t k = 0; k < table.size(); ++k)
        if (table.rows()[k].current_lane == row.current_lane) first = k + 1;
    std::vector<int> base;
    for (const auto& r : table.rows()) base.push_back(r.cav_id);
    std::optional<std::size_t> best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (std::size_t pos = first; pos <= table.size(); ++pos) {
        if (admissible && !admissible(pos)) continue;
        std::vector<int> order = base;
        order.insert(order.begin() + static_cast<std::ptrdiff_t>(pos), row.cav_id);
        const double c = dr_cost(order, est, headway);
        if (c <= best_cost) {
            best_cost = c;
            best = pos;
        }
    }
    return best;
}

std::size_t insert_dr(QueueTable& table, QueueRow row, const std::map<int, DrEstimate>& est,
                      double headway, const std::function<bool(std::size_t)>& admissible) {
    const std::size_t pos = dr_position(table, row, est, headway, admissible).value_or(table.size());
    table.insert(pos, std::move(row));
    return pos;
}

bool default_precedes(const QueueRow& candidate, const QueueRow& self) {
    return candidate.current_lane == self.current_lane && !candidate.passed_all;
}

ConflictSet find_conflicts(const QueueTable& table, int cav_id, const PrecedesFn& precedes) {
    const int i = table.index_of(cav_id);
    if (i < 0) throw std::out_of_range("unknown CAV " + std::to_string(cav_id));
    const QueueRow& self = table.rows()[i];
    ConflictSet out;

    for (int j = i - 1; j >= 0; --j) {
        if (precedes(table.rows()[j], self)) {
            out.ip = table.rows()[j].cav_id;
            break;
        }
    }

    std::vector<MpToken> theta = self.mps;
    if (self.hidden) theta.push_back(*self.hidden);
    bool first_match = true;
    for (int j = i - 1; j >= 0 && !theta.empty(); --j) {
        const QueueRow& other = table.rows()[j];
        std::vector<MpToken> shared;
        for (const auto& t : theta)
            if (other.holds(t)) shared.push_back(t);
        if (shared.empty()) continue;
        if (first_match && other.current_lane == self.current_lane &&
            std::all_of(self.mps.begin(), self.mps.end(), [&](const MpToken& t) { return other.holds(t); })) {
            out.omega.clear();
            out.ip = other.cav_id;
            out.condition = ConflictCondition::FullMatch;
            return out;
        }
        first_match = false;
        for (const auto& t : shared) {
            theta.erase(std::find(theta.begin(), theta.end(), t));
            const bool self_hidden = self.hidden && *self.hidden == t;
            const bool other_hidden = other.hidden && *other.hidden == t;
            if (!(self_hidden && other_hidden)) out.omega.push_back({t, other.cav_id});
        }
    }
    out.condition = out.ip ? ConflictCondition::Mixed : ConflictCondition::LateralOnly;
    return out;
}

void handle_event(QueueTable& table, const QueueEvent& ev) {
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, EntryEvent>) insert_fifo(table, e.row);
            else if constexpr (std::is_same_v<T, DepartureEvent>) table.remove(e.cav_id);
            else if constexpr (std::is_same_v<T, LaneChangeCompleted>) table.set_lane(e.cav_id, e.lane);
            else table.reorder_lane(e.lane, e.position);
        },
        ev);
}

}  // namespace ocbf
