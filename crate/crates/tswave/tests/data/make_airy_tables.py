from mpmath import mp, mpf, mpc, airyai, pi, exp
mp.dps = 60
A1 = None
def bundle(z):
    with mp.workdps(60 + int(2*float(abs(z))**1.5/2.3)):
        return _bundle(z)
def _bundle(z):
    return (airyai(z), airyai(z, derivative=1),
            airyai(z, derivative=-1) - mpf(1)/3,
            airyai(z, derivative=-2) - z/3 - airyai(0, derivative=1))
f = lambda x: "%.17e,%.17e" % (float(x.real), float(x.imag))
rows = []
for r in [0.5, 1.0, 2.5, 4.0, 6.0, 6.9, 7.1, 8.0, 9.5, 11.0, 13.0, 15.0, 20.0, 30.0, 45.0]:
    for k in range(-6, 7):
        th = k*pi/6
        if k == -6: continue
        for dth in [0, pi/24]:
            z = r*exp(1j*(th+dth))
            if abs(th + dth) > pi: continue
            b = bundle(mpc(z))
            rows.append(f(mpc(z)) + "," + ",".join(f(x) for x in b))
open("airy_fan.csv","w").write(
  "re_z,im_z,re_ai,im_ai,re_aip,im_aip,re_ai1,im_ai1,re_ai2,im_ai2\n" + "\n".join(rows) + "\n")
rr = []
for r in [7.0, 12.0, 30.0, 100.0, 300.0]:
    for dth in [0, 0.01, 0.03]:
        z = r*exp(1j*(-5*pi/6 + dth))
        b = bundle(mpc(z))
        rr.append(f(mpc(z)) + "," + f(b[2]/b[3]))
open("airy_ratio.csv","w").write("re_z,im_z,re_ratio,im_ratio\n" + "\n".join(rr) + "\n")
print(len(rows), len(rr))
