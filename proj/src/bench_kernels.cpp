// IR text of the built-in kernels. corpus/v1 holds the same text, one file per
// kernel; test_bench checks the two stay in sync.

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "evomir/bench.hpp"

namespace evomir::bench {

namespace {

// One thread per column of B. Row r = d - t is computed at step d. Each step
// every thread also wipes both staging rows before republishing them.
constexpr std::string_view kSwNaive = R"(; wavefront Smith-Waterman, one thread per column
meta "kernel" = "sw_naive"
meta "source" = "sw_naive.cu"
meta "version" = "1"

global @seqa[i32 x 256]
global @seqb[i32 x 256]
global @score[i32 x 66049]
global @best[i32 x 1]
shared @cur[i32 x 256]
shared @prev[i32 x 256]
shared @bests[i32 x 256]
; 0 h, 1 h of the previous step, 2 running best, 3 step, 4 loop counter, 5 reduction
local [i32 x 6]

fn @sw_naive(%n: i32, %m: i32) {
entry:
  %t = tid.block
  %nt = dim.block
  %m1 = add %m, 1
  %col = add %t, 1
  %inb = icmp.slt %t, %m
  %bt = ld.global @seqb, %t !loc "sw_naive.cu:21"
  %steps = add %n, %m
  %last = sub %steps, 1
  br step
step:
  %d = ld.local 3
  %more = icmp.slt %d, %last !loc "sw_naive.cu:24"
  condbr %more, body, finish
body:
  bar.block
  %r = sub %d, %t
  %r_lo = icmp.sge %r, 0
  %r_hi = icmp.slt %r, %n
  %rok = and %r_lo, %r_hi
  %act = and %rok, %inb !loc "sw_naive.cu:28"
  %h1 = ld.local 1
  st.local 0, %h1
  condbr %act, cell, sync
cell:
  %tl = sub %t, 1
  %tlc = max %tl, 0
  %left0 = ld.shared @cur, %tlc !loc "sw_naive.cu:31"
  %diag0 = ld.shared @prev, %tlc !loc "sw_naive.cu:32"
  %first = icmp.eq %t, 0
  %left = select %first, 0, %left0
  %diag = select %first, 0, %diag0
  %ar = ld.global @seqa, %r !loc "sw_naive.cu:35"
  %same = icmp.eq %ar, %bt
  %s = select %same, 2, -2
  %hd = add %diag, %s !loc "sw_naive.cu:37"
  %hu = add %h1, -1 !loc "sw_naive.cu:38"
  %hl = add %left, -1 !loc "sw_naive.cu:39"
  %x0 = max %hd, %hu
  %x1 = max %x0, %hl
  %h = max %x1, 0 !loc "sw_naive.cu:40"
  st.local 0, %h
  %row = add %r, 1
  %rowoff = mul %row, %m1
  %at = add %rowoff, %col
  st.global @score, %at, %h !loc "sw_naive.cu:43"
  %bb = ld.local 2
  %nb = max %bb, %h !loc "sw_naive.cu:44"
  st.local 2, %nb
  br sync
sync:
  bar.block !loc "sw_naive.cu:47"
  st.local 4, 0 !loc "sw_naive.cu:48"
  br clear
clear:
  %k = ld.local 4
  %kmore = icmp.slt %k, %nt !loc "sw_naive.cu:48"
  condbr %kmore, clear_body, publish
clear_body:
  st.shared @cur, %k, 0 !loc "sw_naive.cu:49"
  st.shared @prev, %k, 0 !loc "sw_naive.cu:50"
  bar.block !loc "sw_naive.cu:51"
  %k1 = add %k, 1 !loc "sw_naive.cu:48"
  st.local 4, %k1 !loc "sw_naive.cu:48"
  br clear
publish:
  bar.block !loc "sw_naive.cu:53"
  %hn = ld.local 0
  st.shared @cur, %t, %hn !loc "sw_naive.cu:54"
  st.shared @prev, %t, %h1 !loc "sw_naive.cu:55"
  st.local 1, %hn
  %d1 = add %d, 1
  st.local 3, %d1
  br step
finish:
  %mine = ld.local 2
  st.shared @bests, %t, %mine !loc "sw_naive.cu:60"
  bar.block !loc "sw_naive.cu:61"
  %lead = icmp.eq %t, 0
  condbr %lead, reduce, done
reduce:
  st.local 4, 0
  br red_head
red_head:
  %rk = ld.local 4
  %rmore = icmp.slt %rk, %nt
  condbr %rmore, red_body, red_out
red_body:
  %rv = ld.shared @bests, %rk !loc "sw_naive.cu:64"
  %racc = ld.local 5
  %rmax = max %racc, %rv
  st.local 5, %rmax
  %rk1 = add %rk, 1
  st.local 4, %rk1
  br red_head
red_out:
  %total = ld.local 5
  st.global @best, 0, %total !loc "sw_naive.cu:67"
  br done
done:
  ret
}
)";

// Same wavefront. Neighbour scores move between lanes with shfl; lane 0 of
// each warp reads the previous warp's last column from a per-warp edge array.
// Every exchange sits behind a %late test that is never true at run time, so
// the full shared-memory exchange paths are present but cold.
constexpr std::string_view kSwTuned = R"(; wavefront Smith-Waterman with warp shuffles
meta "kernel" = "sw_tuned"
meta "source" = "sw_tuned.cu"
meta "version" = "1"

global @seqa[i32 x 256]
global @seqb[i32 x 256]
global @score[i32 x 66049]
global @best[i32 x 1]
shared @xh[i32 x 256]
shared @xp[i32 x 256]
shared @edge_h[i32 x 8]
shared @edge_p[i32 x 8]
shared @bests[i32 x 256]
; 0 h, 1 h one step back, 2 running best, 3 step, 4 left, 5 diagonal,
; 6 h two steps back, 7 loop counter, 8 reduction
local [i32 x 9]

fn @sw_tuned(%n: i32, %m: i32) {
entry:
  %t = tid.block
  %lane = tid.lane
  %warp = tid.warp
  %nt = dim.block
  %m1 = add %m, 1
  %col = add %t, 1
  %inb = icmp.slt %t, %m
  %valid = icmp.slt %t, %nt
  %lane0 = icmp.eq %lane, 0
  %lane31 = icmp.eq %lane, 31
  %first = icmp.eq %t, 0
  %src = sub %lane, 1
  %wl = sub %warp, 1
  %wlc = max %wl, 0
  %tl = sub %t, 1
  %tlc = max %tl, 0
  %bt = ld.global @seqb, %t !loc "sw_tuned.cu:30"
  %steps = add %n, %m
  %last = sub %steps, 1
  br step
step:
  %d = ld.local 3
  %more = icmp.slt %d, %last !loc "sw_tuned.cu:33"
  condbr %more, body, finish
body:
  bar.block !loc "sw_tuned.cu:35"
  %late = icmp.sge %d, %last
  %h1 = ld.local 1
  %h2 = ld.local 6
  condbr %late, xa_full, xa_split !loc "sw_tuned.cu:39"
xa_full:
  %fl = ld.shared @xh, %tlc !loc "sw_tuned.cu:40"
  st.local 4, %fl
  br xa_done
xa_split:
  condbr %lane0, xa_edge, xa_shfl !loc "sw_tuned.cu:42"
xa_edge:
  %el = ld.shared @edge_h, %wlc !loc "sw_tuned.cu:43"
  st.local 4, %el
  br xa_done
xa_shfl:
  bar.warp !loc "sw_tuned.cu:45"
  %sl = shfl %h1, %src !loc "sw_tuned.cu:45"
  st.local 4, %sl
  br xa_done
xa_done:
  condbr %late, xb_full, xb_split !loc "sw_tuned.cu:48"
xb_full:
  %fd = ld.shared @xp, %tlc !loc "sw_tuned.cu:49"
  st.local 5, %fd
  br xb_done
xb_split:
  condbr %lane0, xb_edge, xb_shfl !loc "sw_tuned.cu:51"
xb_edge:
  %ed = ld.shared @edge_p, %wlc !loc "sw_tuned.cu:52"
  st.local 5, %ed
  br xb_done
xb_shfl:
  bar.warp !loc "sw_tuned.cu:54"
  %sd = shfl %h2, %src !loc "sw_tuned.cu:54"
  st.local 5, %sd
  br xb_done
xb_done:
  %left0 = ld.local 4
  %diag0 = ld.local 5
  %left = select %first, 0, %left0
  %diag = select %first, 0, %diag0
  %r = sub %d, %t
  %r_lo = icmp.sge %r, 0
  %r_hi = icmp.slt %r, %n
  %rok = and %r_lo, %r_hi
  %act = and %rok, %inb !loc "sw_tuned.cu:62"
  st.local 0, %h1
  condbr %act, cell, sync
cell:
  %ar = ld.global @seqa, %r !loc "sw_tuned.cu:65"
  %same = icmp.eq %ar, %bt
  %s = select %same, 2, -2
  %hd = add %diag, %s !loc "sw_tuned.cu:67"
  %hu = add %h1, -1 !loc "sw_tuned.cu:68"
  %hl = add %left, -1 !loc "sw_tuned.cu:69"
  %x0 = max %hd, %hu
  %x1 = max %x0, %hl
  %h = max %x1, 0 !loc "sw_tuned.cu:70"
  st.local 0, %h
  %row = add %r, 1
  %rowoff = mul %row, %m1
  %at = add %rowoff, %col
  st.global @score, %at, %h !loc "sw_tuned.cu:73"
  %bb = ld.local 2
  %nb = max %bb, %h
  st.local 2, %nb
  br sync
sync:
  bar.block !loc "sw_tuned.cu:77"
  %hn = ld.local 0
  condbr %late, pub_full, pub_edge_chk !loc "sw_tuned.cu:79"
pub_full:
  st.shared @xh, %t, %hn !loc "sw_tuned.cu:80"
  st.shared @xp, %t, %h1 !loc "sw_tuned.cu:81"
  br pub_edge_chk
pub_edge_chk:
  condbr %lane31, pub_edge, advance !loc "sw_tuned.cu:83"
pub_edge:
  st.shared @edge_h, %warp, %hn !loc "sw_tuned.cu:84"
  st.shared @edge_p, %warp, %h1 !loc "sw_tuned.cu:85"
  br advance
advance:
  st.local 6, %h1
  st.local 1, %hn
  %d1 = add %d, 1
  st.local 3, %d1
  br step
finish:
  %mine = ld.local 2
  st.shared @bests, %t, %mine
  bar.block
  %lead = icmp.eq %t, 0
  condbr %lead, reduce, done
reduce:
  st.local 7, 0
  br red_head
red_head:
  %rk = ld.local 7
  %rmore = icmp.slt %rk, %nt
  condbr %rmore, red_body, red_out
red_body:
  %rv = ld.shared @bests, %rk
  %racc = ld.local 8
  %rmax = max %racc, %rv
  st.local 8, %rmax
  %rk1 = add %rk, 1
  st.local 7, %rk1
  br red_head
red_out:
  %total = ld.local 8
  st.global @best, 0, %total !loc "sw_tuned.cu:100"
  br done
done:
  ret
}
)";

// One thread per cell, two halves of @g used as ping-pong buffers. Every
// neighbour read is behind a full bounds test.
constexpr std::string_view kGridChecked = R"(; 4-neighbour diffusion with bounds checks
meta "kernel" = "grid_checked"
meta "source" = "diffuse.cu"
meta "version" = "1"

global @grid_in[i32 x 4096]
global @grid_out[i32 x 4096]
shared @g[i32 x 8192]
; 0 step, 1 accumulator
local [i32 x 2]

fn @diffuse_checked(%w: i32, %h: i32, %steps: i32, %rate: i32) {
entry:
  %t = tid.block
  %cells = mul %w, %h
  %on = icmp.slt %t, %cells
  %y = div %t, %w
  %yw = mul %y, %w
  %x = sub %t, %yw
  %xl = sub %x, 1
  %xr = add %x, 1
  %yu = sub %y, 1
  %yd = add %y, 1
  condbr %on, load, head
load:
  %v0 = ld.global @grid_in, %t !loc "diffuse.cu:12"
  st.shared @g, %t, %v0
  br head
head:
  %s = ld.local 0
  %more = icmp.slt %s, %steps
  condbr %more, step, finish
step:
  bar.block !loc "diffuse.cu:16"
  %par = and %s, 1
  %src = mul %par, 4096
  %dst = sub 4096, %src
  condbr %on, cell, advance
cell:
  %ci = add %src, %t
  %c = ld.shared @g, %ci !loc "diffuse.cu:20"
  %qc0 = mul %c, %rate
  %qc = div %qc0, 1024
  st.local 1, %c
  %l_x0 = icmp.sge %xl, 0 !loc "diffuse.cu:24"
  %l_x1 = icmp.slt %xl, %w !loc "diffuse.cu:24"
  %l_y0 = icmp.sge %y, 0 !loc "diffuse.cu:24"
  %l_y1 = icmp.slt %y, %h !loc "diffuse.cu:24"
  %l_a = and %l_x0, %l_x1
  %l_b = and %l_a, %l_y0
  %l_in = and %l_b, %l_y1
  condbr %l_in, nl, gr !loc "diffuse.cu:24"
nl:
  %li = sub %ci, 1
  %lv = ld.shared @g, %li !loc "diffuse.cu:25"
  %lq0 = mul %lv, %rate
  %lq = div %lq0, 1024
  %la = ld.local 1
  %ls = add %la, %lq
  st.local 1, %ls
  br gr
gr:
  %r_x0 = icmp.sge %xr, 0 !loc "diffuse.cu:27"
  %r_x1 = icmp.slt %xr, %w !loc "diffuse.cu:27"
  %r_y0 = icmp.sge %y, 0 !loc "diffuse.cu:27"
  %r_y1 = icmp.slt %y, %h !loc "diffuse.cu:27"
  %r_a = and %r_x0, %r_x1
  %r_b = and %r_a, %r_y0
  %r_in = and %r_b, %r_y1
  condbr %r_in, nr, gu !loc "diffuse.cu:27"
nr:
  %ri = add %ci, 1
  %rv = ld.shared @g, %ri !loc "diffuse.cu:28"
  %rq0 = mul %rv, %rate
  %rq = div %rq0, 1024
  %ra = ld.local 1
  %rs = add %ra, %rq
  st.local 1, %rs
  br gu
gu:
  %u_x0 = icmp.sge %x, 0 !loc "diffuse.cu:30"
  %u_x1 = icmp.slt %x, %w !loc "diffuse.cu:30"
  %u_y0 = icmp.sge %yu, 0 !loc "diffuse.cu:30"
  %u_y1 = icmp.slt %yu, %h !loc "diffuse.cu:30"
  %u_a = and %u_x0, %u_x1
  %u_b = and %u_a, %u_y0
  %u_in = and %u_b, %u_y1
  condbr %u_in, nu, gd !loc "diffuse.cu:30"
nu:
  %ui = sub %ci, %w
  %uv = ld.shared @g, %ui !loc "diffuse.cu:31"
  %uq0 = mul %uv, %rate
  %uq = div %uq0, 1024
  %ua = ld.local 1
  %us = add %ua, %uq
  st.local 1, %us
  br gd
gd:
  %d_x0 = icmp.sge %x, 0 !loc "diffuse.cu:33"
  %d_x1 = icmp.slt %x, %w !loc "diffuse.cu:33"
  %d_y0 = icmp.sge %yd, 0 !loc "diffuse.cu:33"
  %d_y1 = icmp.slt %yd, %h !loc "diffuse.cu:33"
  %d_a = and %d_x0, %d_x1
  %d_b = and %d_a, %d_y0
  %d_in = and %d_b, %d_y1
  condbr %d_in, nd, cell_out !loc "diffuse.cu:33"
nd:
  %di = add %ci, %w
  %dv = ld.shared @g, %di !loc "diffuse.cu:34"
  %dq0 = mul %dv, %rate
  %dq = div %dq0, 1024
  %da = ld.local 1
  %ds = add %da, %dq
  st.local 1, %ds
  br cell_out
cell_out:
  %kl = select %l_in, 1, 0
  %kr = select %r_in, 1, 0
  %ku = select %u_in, 1, 0
  %kd = select %d_in, 1, 0
  %k0 = add %kl, %kr
  %k1 = add %k0, %ku
  %k = add %k1, %kd
  %kq = mul %k, %qc
  %acc = ld.local 1
  %nv = sub %acc, %kq !loc "diffuse.cu:37"
  %oi = add %dst, %t
  st.shared @g, %oi, %nv !loc "diffuse.cu:38"
  br advance
advance:
  %s1 = add %s, 1
  st.local 0, %s1
  br head
finish:
  bar.block
  %fpar = and %steps, 1
  %fsrc = mul %fpar, 4096
  condbr %on, store, done
store:
  %fi = add %fsrc, %t
  %fv = ld.shared @g, %fi
  st.global @grid_out, %t, %fv !loc "diffuse.cu:44"
  br done
done:
  ret
}
)";

// Reads from a zero-bordered (w+2) x (h+2) copy; no bounds tests in the loop.
constexpr std::string_view kGridPadded = R"(; 4-neighbour diffusion over a zero-padded grid
meta "kernel" = "grid_padded"
meta "source" = "diffuse_padded.cu"
meta "version" = "1"

global @grid_in[i32 x 4356]
global @grid_out[i32 x 4096]
shared @g[i32 x 8712]
; 0 step
local [i32 x 1]

fn @diffuse_padded(%w: i32, %h: i32, %steps: i32, %rate: i32) {
entry:
  %t = tid.block
  %cells = mul %w, %h
  %on = icmp.slt %t, %cells
  %y = div %t, %w
  %yw = mul %y, %w
  %x = sub %t, %yw
  %pw = add %w, 2
  %py = add %y, 1
  %pyo = mul %py, %pw
  %px = add %x, 1
  %p = add %pyo, %px
  %wm = sub %w, 1
  %hm = sub %h, 1
  %kx0 = min %x, 1
  %rx = sub %wm, %x
  %kx1 = min %rx, 1
  %ky0 = min %y, 1
  %ry = sub %hm, %y
  %ky1 = min %ry, 1
  %k0 = add %kx0, %kx1
  %k1 = add %k0, %ky0
  %k = add %k1, %ky1 !loc "diffuse_padded.cu:14"
  condbr %on, load, head
load:
  %v0 = ld.global @grid_in, %p !loc "diffuse_padded.cu:16"
  st.shared @g, %p, %v0
  br head
head:
  %s = ld.local 0
  %more = icmp.slt %s, %steps
  condbr %more, step, finish
step:
  bar.block !loc "diffuse_padded.cu:20"
  %par = and %s, 1
  %src = mul %par, 4356
  %dst = sub 4356, %src
  condbr %on, cell, advance
cell:
  %ci = add %src, %p
  %c = ld.shared @g, %ci !loc "diffuse_padded.cu:24"
  %qc0 = mul %c, %rate
  %qc = div %qc0, 1024
  %li = sub %ci, 1
  %lv = ld.shared @g, %li !loc "diffuse_padded.cu:26"
  %lq0 = mul %lv, %rate
  %lq = div %lq0, 1024
  %ri = add %ci, 1
  %rv = ld.shared @g, %ri !loc "diffuse_padded.cu:27"
  %rq0 = mul %rv, %rate
  %rq = div %rq0, 1024
  %ui = sub %ci, %pw
  %uv = ld.shared @g, %ui !loc "diffuse_padded.cu:28"
  %uq0 = mul %uv, %rate
  %uq = div %uq0, 1024
  %di = add %ci, %pw
  %dv = ld.shared @g, %di !loc "diffuse_padded.cu:29"
  %dq0 = mul %dv, %rate
  %dq = div %dq0, 1024
  %n0 = add %lq, %rq
  %n1 = add %n0, %uq
  %n2 = add %n1, %dq
  %kq = mul %k, %qc
  %a0 = add %c, %n2
  %nv = sub %a0, %kq !loc "diffuse_padded.cu:31"
  %oi = add %dst, %p
  st.shared @g, %oi, %nv !loc "diffuse_padded.cu:32"
  br advance
advance:
  %s1 = add %s, 1
  st.local 0, %s1
  br head
finish:
  bar.block
  %fpar = and %steps, 1
  %fsrc = mul %fpar, 4356
  condbr %on, store, done
store:
  %fi = add %fsrc, %p
  %fv = ld.shared @g, %fi
  st.global @grid_out, %t, %fv !loc "diffuse_padded.cu:38"
  br done
done:
  ret
}
)";

// Agents bid for a random free neighbour by writing their cell index + 1 into
// @prop; the store that lands last wins the cell.
constexpr std::string_view kTcellWalk = R"(; random walk of T cells with collision resolution
meta "kernel" = "tcell_walk"
meta "source" = "tcell.cu"
meta "version" = "1"

global @occ_in[i32 x 1024]
global @occ_out[i32 x 1024]
global @visits[i32 x 1024]
shared @occ[i32 x 1024]
shared @prop[i32 x 1024]
shared @nocc[i32 x 1024]
; 0 step, 1 bid target, 2 visit count
local [i32 x 3]

fn @tcell_walk(%w: i32, %h: i32, %steps: i32) {
entry:
  %t = tid.block
  %cells = mul %w, %h
  %on = icmp.slt %t, %cells
  %y = div %t, %w
  %yw = mul %y, %w
  %x = sub %t, %yw
  %me = add %t, 1
  condbr %on, load, head
load:
  %o0 = ld.global @occ_in, %t !loc "tcell.cu:14"
  st.shared @occ, %t, %o0
  br head
head:
  %s = ld.local 0
  %more = icmp.slt %s, %steps
  condbr %more, step, finish
step:
  bar.block
  condbr %on, clear, propose_wait
clear:
  st.shared @prop, %t, 0 !loc "tcell.cu:21"
  st.shared @nocc, %t, 0 !loc "tcell.cu:22"
  br propose_wait
propose_wait:
  bar.block
  st.local 1, -1
  condbr %on, look, bid_wait
look:
  %a = ld.shared @occ, %t
  %has = icmp.ne %a, 0
  condbr %has, pick, bid_wait
pick:
  %rnd = rand !loc "tcell.cu:30"
  %dir = and %rnd, 3 !loc "tcell.cu:30"
  %is0 = icmp.eq %dir, 0
  %is1 = icmp.eq %dir, 1
  %is2 = icmp.eq %dir, 2
  %is3 = icmp.eq %dir, 3
  %dxa = select %is0, -1, 0
  %dx = select %is1, 1, %dxa
  %dya = select %is2, -1, 0
  %dy = select %is3, 1, %dya
  %nx = add %x, %dx
  %ny = add %y, %dy
  %nx0 = icmp.sge %nx, 0
  %nx1 = icmp.slt %nx, %w
  %ny0 = icmp.sge %ny, 0
  %ny1 = icmp.slt %ny, %h
  %ina = and %nx0, %nx1
  %inc = and %ny0, %ny1
  %in = and %ina, %inc
  condbr %in, probe, bid_wait !loc "tcell.cu:36"
probe:
  %nyw = mul %ny, %w
  %tgt = add %nyw, %nx
  %there = ld.shared @occ, %tgt
  %free = icmp.eq %there, 0
  condbr %free, bid, bid_wait !loc "tcell.cu:39"
bid:
  st.shared @prop, %tgt, %me !loc "tcell.cu:40"
  st.local 1, %tgt
  br bid_wait
bid_wait:
  bar.block
  condbr %on, resolve, settle_wait
resolve:
  %a2 = ld.shared @occ, %t
  %has2 = icmp.ne %a2, 0
  condbr %has2, decide, settle_wait
decide:
  %want = ld.local 1
  %bidded = icmp.sge %want, 0
  %wc = max %want, 0
  %winner = ld.shared @prop, %wc
  %mine = icmp.eq %winner, %me
  %won = and %bidded, %mine
  %dest = select %won, %wc, %t !loc "tcell.cu:49"
  st.shared @nocc, %dest, %a2 !loc "tcell.cu:50"
  br settle_wait
settle_wait:
  bar.block
  condbr %on, settle, advance
settle:
  %nv = ld.shared @nocc, %t
  st.shared @occ, %t, %nv
  %occd = icmp.ne %nv, 0
  %one = select %occd, 1, 0
  %vc = ld.local 2
  %vn = add %vc, %one
  st.local 2, %vn
  br advance
advance:
  %s1 = add %s, 1
  st.local 0, %s1
  br head
finish:
  bar.block
  condbr %on, out, done
out:
  %fo = ld.shared @occ, %t
  st.global @occ_out, %t, %fo !loc "tcell.cu:62"
  %fv = ld.local 2
  st.global @visits, %t, %fv !loc "tcell.cu:63"
  br done
done:
  ret
}
)";

struct Entry {
    std::string_view name;
    std::string_view text;
};

constexpr Entry kKernels[] = {
    {"sw_naive", kSwNaive},         {"sw_tuned", kSwTuned},     {"grid_checked", kGridChecked},
    {"grid_padded", kGridPadded},   {"tcell_walk", kTcellWalk},
};

}  // namespace

std::vector<std::string> kernel_names() {
    std::vector<std::string> out;
    for (const auto& k : kKernels) out.emplace_back(k.name);
    return out;
}

std::string_view kernel_source(std::string_view name) {
    for (const auto& k : kKernels) {
        if (k.name == name) return k.text;
    }
    throw std::out_of_range("unknown kernel '" + std::string(name) + "'");
}

mir::Program kernel(std::string_view name) { return mir::parse(kernel_source(name)); }

mir::Program sw_kernel_naive() { return kernel("sw_naive"); }
mir::Program sw_kernel_tuned() { return kernel("sw_tuned"); }
mir::Program grid_diffusion_checked() { return kernel("grid_checked"); }
mir::Program grid_diffusion_padded() { return kernel("grid_padded"); }
mir::Program tcell_walk() { return kernel("tcell_walk"); }

}  // namespace evomir::bench
