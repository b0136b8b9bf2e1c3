#include "panelmetrics/stats.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <charconv>
#include <cmath>

#include "panelmetrics/error.hpp"

namespace pm::stats {

double normal_cdf(double z) { return boost::math::cdf(boost::math::normal_distribution<double>(), z); }

double normal_two_sided_p(double z) {
  if (std::isnan(z)) return std::nan("");
  return 2.0 * boost::math::cdf(boost::math::complement(boost::math::normal_distribution<double>(), std::abs(z)));
}

double t_two_sided_p(double t, double df) {
  if (std::isnan(t) || !(df > 0.0)) return std::nan("");
  if (std::isinf(t)) return 0.0;
  return 2.0 * boost::math::cdf(boost::math::complement(boost::math::students_t_distribution<double>(df), std::abs(t)));
}

double chi2_upper_p(double x, double df) {
  if (std::isnan(x) || !(df > 0.0)) return std::nan("");
  if (x <= 0.0) return 1.0;
  return boost::math::cdf(boost::math::complement(boost::math::chi_squared_distribution<double>(df), x));
}

double t_quantile(double p, double df) {
  return boost::math::quantile(boost::math::students_t_distribution<double>(df), p);
}

std::string round_fixed(double value, int decimals) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[512];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::fixed);
  if (ec != std::errc{}) throw Error(ErrorCode::InvalidArgument, "cannot format value");
  std::string s(buf, end);
  bool negative = false;
  if (!s.empty() && s.front() == '-') {
    negative = true;
    s.erase(0, 1);
  }
  auto dot = s.find('.');
  std::string int_part = dot == std::string::npos ? s : s.substr(0, dot);
  std::string frac = dot == std::string::npos ? std::string() : s.substr(dot + 1);
  const auto d = static_cast<std::size_t>(decimals);
  bool round_up = frac.size() > d && frac[d] >= '5';
  frac.resize(d, '0');
  std::string digits = int_part + frac;
  if (round_up) {
    int i = static_cast<int>(digits.size()) - 1;
    while (i >= 0) {
      if (digits[static_cast<std::size_t>(i)] == '9') {
        digits[static_cast<std::size_t>(i)] = '0';
        --i;
      } else {
        ++digits[static_cast<std::size_t>(i)];
        break;
      }
    }
    if (i < 0) digits.insert(digits.begin(), '1');
  }
  std::string out = digits.substr(0, digits.size() - d);
  if (d > 0) out += "." + digits.substr(digits.size() - d);
  const bool all_zero = digits.find_first_not_of('0') == std::string::npos;
  if (negative && !all_zero) out.insert(out.begin(), '-');
  return out;
}

}  // namespace pm::stats
