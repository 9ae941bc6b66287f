import java.net.*;
import java.io.*;
import java.util.*;

class fileReaderServer{
    public static void main(){
        try{

            int[] availablePortNumbers = {2345, 1234, 8943};

            System.out.println("Choose from the following port numbers to open the socket");

            for (int index = 0; index < availablePortNumbers.length; index++){
                System.out.println( (index+1)+" --> "+availablePortNumbers[index]);
            }

            Scanner sc = new Scanner(System.in);
            int portIndex = sc.nextInt();

            if (portIndex >= 1 && portIndex <= availablePortNumbers.length){

                portIndex--;

                int serverPortNumber = availablePortNumbers[portIndex];
                ServerSocket connectionSocket = new ServerSocket(serverPortNumber);

                Socket clientSocket = connectionSocket.accept();


                BufferedReader brSocketInput = new BufferedReader(new InputStreamReader(clientSocket.getInputStream()));
                String filename = brSocketInput.readLine();

                brSocketInput.close();

                FileReader fr = new FileReader(filename);
                BufferedReader brFile = new BufferedReader(fr);
                PrintStream socketOutput = new PrintStream(clientSocket.getOutputStream());

                String line = null;

                while ( (line = brFile.readLine() ) != null){

                    socketOutput.println(line);

                }

                brFile.close();
                fr.close();

                socketOutput.flush( );
                clientSocket.close( );
                connectionSocket.close( );
            }
            else{
                System.out.println("Error: wrong selection of port number...");
            }
        }
        catch(IOException ie){
            ie.printStackTrace();
        }
    }
}
